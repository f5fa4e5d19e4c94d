#ifndef ACE_RUNTIME_HPP
#define ACE_RUNTIME_HPP

namespace ace {

/// Keeps large tensor buffers on the heap instead of fresh mmap()s. Batch
/// tensors are tens of megabytes; with glibc defaults every batch pays for
/// page faults on newly mapped memory. Call once at program start.
void tune_allocator();

}  // namespace ace

#endif  // ACE_RUNTIME_HPP
