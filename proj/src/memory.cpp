#include "eclaire/memory.hpp"

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <new>

namespace eclaire::memory {
namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};

// Every block carries a 16-byte (or alignment-sized) header in front of the
// returned pointer: [header offset][requested size].
constexpr std::size_t kHeader = 16;

void note_alloc(std::size_t size) noexcept {
  const std::size_t now = g_current.fetch_add(size, std::memory_order_relaxed) + size;
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

void* tracked_alloc(std::size_t size, std::size_t align) noexcept {
  const std::size_t header = align > kHeader ? align : kHeader;
  void* base = nullptr;
  if (align > kHeader) {
    const std::size_t total = (size + header + align - 1) / align * align;
    base = std::aligned_alloc(align, total);
  } else {
    base = std::malloc(size + header);
  }
  if (!base) return nullptr;
  auto* user = static_cast<unsigned char*>(base) + header;
  reinterpret_cast<std::size_t*>(user)[-2] = header;
  reinterpret_cast<std::size_t*>(user)[-1] = size;
  note_alloc(size);
  return user;
}

void tracked_free(void* p) noexcept {
  if (!p) return;
  auto* user = static_cast<unsigned char*>(p);
  const std::size_t header = reinterpret_cast<std::size_t*>(user)[-2];
  const std::size_t size = reinterpret_cast<std::size_t*>(user)[-1];
  g_current.fetch_sub(size, std::memory_order_relaxed);
  std::free(user - header);
}

void* alloc_or_throw(std::size_t size, std::size_t align) {
  if (size == 0) size = 1;
  for (;;) {
    if (void* p = tracked_alloc(size, align)) return p;
    std::new_handler handler = std::get_new_handler();
    if (!handler) throw std::bad_alloc();
    handler();
  }
}

}  // namespace

std::size_t current_bytes() noexcept { return g_current.load(std::memory_order_relaxed); }
std::size_t peak_bytes() noexcept { return g_peak.load(std::memory_order_relaxed); }
void reset_peak() noexcept { g_peak.store(g_current.load(std::memory_order_relaxed)); }

}  // namespace eclaire::memory

using eclaire::memory::alloc_or_throw;
using eclaire::memory::tracked_free;

void* operator new(std::size_t size) { return alloc_or_throw(size, 0); }
void* operator new[](std::size_t size) { return alloc_or_throw(size, 0); }
void* operator new(std::size_t size, std::align_val_t al) {
  return alloc_or_throw(size, static_cast<std::size_t>(al));
}
void* operator new[](std::size_t size, std::align_val_t al) {
  return alloc_or_throw(size, static_cast<std::size_t>(al));
}
void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return alloc_or_throw(size, 0);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return alloc_or_throw(size, 0);
  } catch (...) {
    return nullptr;
  }
}
void* operator new(std::size_t size, std::align_val_t al, const std::nothrow_t&) noexcept {
  try {
    return alloc_or_throw(size, static_cast<std::size_t>(al));
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t size, std::align_val_t al, const std::nothrow_t&) noexcept {
  try {
    return alloc_or_throw(size, static_cast<std::size_t>(al));
  } catch (...) {
    return nullptr;
  }
}

void operator delete(void* p) noexcept { tracked_free(p); }
void operator delete[](void* p) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete(void* p, std::align_val_t, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete[](void* p, std::align_val_t, const std::nothrow_t&) noexcept {
  tracked_free(p);
}
