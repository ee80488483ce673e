#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace dockmtl {

// Training allocates and frees activation buffers of a few megabytes per
// batch. With glibc's defaults each of those is a fresh mmap and the run
// spends most of its time in page faults; keeping them on the heap is
// roughly twice as fast. Call once from main; a no-op elsewhere.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace dockmtl
