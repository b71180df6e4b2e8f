// Linked into executables only. OpenBLAS 0.3.20 selects AVX-512 (Cooperlake)
// kernels on some virtual CPUs where they produce wrong dgemm results. The
// core type is read once when the library loads, so the only reliable fix
// from inside the program is to re-exec with OPENBLAS_CORETYPE set. An
// explicit OPENBLAS_CORETYPE in the environment always wins.
#include <cstdlib>
#include <unistd.h>

namespace gibbskit {

void ensure_blas_kernel(char** argv) {
#if defined(__x86_64__)
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
  __builtin_cpu_init();
  if (!__builtin_cpu_supports("avx512f") || !__builtin_cpu_supports("avx2")) return;
  setenv("OPENBLAS_CORETYPE", "Haswell", 1);
  execv("/proc/self/exe", argv);
  // exec failed: keep running, the library's BLAS self-check reports the problem.
#else
  (void)argv;
#endif
}

}  // namespace gibbskit
