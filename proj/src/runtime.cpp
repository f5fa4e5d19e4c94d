#include "ace/runtime.hpp"

#include <cstdlib>  // defines __GLIBC__ on glibc systems

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ace {

void tune_allocator() {
#if defined(__GLIBC__)
  // Keep large tensor buffers on the heap instead of a fresh mmap (and page
  // faults) per allocation, and grow/keep the heap top in large steps. glibc rejects thresholds above 32 MiB.
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace ace
