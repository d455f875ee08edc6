#pragma once

namespace ssaam {

// Kernels that have an OpenMP path keep the serial loop alongside it; tests
// check the two agree bit-for-bit.
enum class Exec { Serial, Parallel };

}  // namespace ssaam
