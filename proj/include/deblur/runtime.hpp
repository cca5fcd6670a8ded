#pragma once

namespace deblur {

/// Keeps large freed blocks inside the heap instead of returning them to the
/// kernel. Training allocates and frees multi-megabyte activations every
/// iteration; without this each one costs a fresh mmap and page faults.
/// Process-wide; a no-op outside glibc.
void tune_allocator();

} // namespace deblur
