#pragma once

#include <cstddef>

// Process-wide heap accounting. Linking memory.cpp replaces the global
// operator new/delete family with counting versions. The numbers cover C++
// allocations only (not malloc from C libraries, stacks, or mapped files), so
// they are a relative proxy for footprint rather than resident set size.
namespace eclaire::memory {

std::size_t current_bytes() noexcept;
std::size_t peak_bytes() noexcept;

// Sets the peak to the current live byte count.
void reset_peak() noexcept;

}  // namespace eclaire::memory
