#pragma once

namespace ndp::detail {

/// Keeps freed tape buffers in the heap rather than handing them back to the
/// kernel after every iteration. Process-wide, applied once; no-op outside
/// glibc.
void retain_freed_memory();

}  // namespace ndp::detail
