#pragma once

namespace camiqa {

/// Keeps freed tape buffers in the process heap instead of returning them to
/// the OS after every step (glibc only; a no-op elsewhere). Call once from main.
void configure_allocator();

}  // namespace camiqa
