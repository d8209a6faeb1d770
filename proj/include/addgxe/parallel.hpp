#pragma once

namespace addgxe {

/// Parallel kernels keep a serial twin; both produce bit-identical results.
enum class Execution { serial, parallel };

/// Thread count from ADDGXE_THREADS when set, else the OpenMP default.
int default_threads();
/// Sets the OpenMP thread count used by parallel kernels (values < 1 ignored).
void set_threads(int n);
int current_threads();

}  // namespace addgxe
