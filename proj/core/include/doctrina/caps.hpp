#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace doctrina {

// Raised when an operation would need structure beyond the configured caps
// (missing product object, oversized fiber, exhausted search budget).
// Callers that can degrade gracefully catch it and record a skip instead.
struct SizeExceeded : std::runtime_error {
  explicit SizeExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct Caps {
  // Largest fiber eligible for exhaustive element scans and table
  // materialisation. Fibers above this stay usable for pointwise work.
  std::uint64_t lattice = 4096;

  // Budget for uniqueness scans (counted in candidates examined). Exceeding
  // it reports size-exceeded, never a partial answer.
  std::uint64_t search = 1'000'000;

  // Budget for symbolic associativity scans in category validation.
  std::uint64_t assoc_triples = 200'000'000;

  // Pairwise scan budget for adjunction verification (|dom| * |cod|).
  std::uint64_t pair_scan = 64'000'000;

  // Morphism count ceiling for generator closure; generators refuse beyond it.
  std::uint64_t morphisms = 20000;

  // Reads DOCTRINA_CAP (overrides `lattice`) on top of the defaults.
  static Caps from_env();
  Caps with_lattice(std::uint64_t n) const {
    Caps c = *this;
    c.lattice = n;
    return c;
  }
};

}  // namespace doctrina
