#pragma once

#include <memory>
#include <string>
#include <vector>

#include "doctrina/doctrine.hpp"

namespace doctrina {

// A finite space presented by its specialisation preorder; opens are the
// up-closed sets.
struct SpaceSpec {
  std::string name;
  std::int32_t points = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> order;  // x <= y pairs
};

struct GeneratorSpec {
  std::string family;  // powerset | localic | topology | trivial
  std::vector<std::int32_t> sizes;
  std::int32_t cap = 4;          // object-size cap for product closure
  std::string homs = "full";     // full | projective
  bool subset_closure = true;    // close the size list under subsets
  std::int32_t chain = 0;        // localic: n-chain Heyting algebra
  std::vector<SpaceSpec> spaces; // topology
};

struct Generated {
  std::shared_ptr<const Category> base;
  std::shared_ptr<Doctrine> doctrine;
  StructureReport validation;  // category + products + doctrine checks
};

// Product (and optional subset) closure of a size list up to the cap.
std::vector<std::int32_t> close_sizes(std::vector<std::int32_t> sizes,
                                      std::int32_t cap, bool subsets);

// Full subcategory of finite sets on the closed size list, powerset fibers,
// preimage reindexing. Certificates: diagonal δ, membership/classifiers for
// objects whose power object fits, inclusion comprehensions, ε₁.
Generated gen_powerset(const std::vector<std::int32_t>& sizes,
                       std::int32_t cap, const std::string& homs = "full",
                       bool subsets = true, const Caps& caps = {});

// H-valued predicates over the same base families.
Generated gen_localic(LatticePtr H, const std::vector<std::int32_t>& sizes,
                      std::int32_t cap, const std::string& homs = "full",
                      bool subsets = true, const Caps& caps = {});

// Open-set doctrine over the listed spaces and their products under the cap;
// morphisms are all continuous (= monotone) maps, or coordinate tuples in
// projective mode. No elementary certificate is attached.
Generated gen_topology(const std::vector<SpaceSpec>& spaces, std::int32_t cap,
                       const std::string& homs = "full", const Caps& caps = {});

// One object, one morphism, one-element fiber.
Generated gen_trivial();

Generated generate(const GeneratorSpec& spec, const Caps& caps = {});

// The Sierpinski space as a SpaceSpec (0 below 1; opens ∅, {1}, Σ).
SpaceSpec sierpinski();

// Convenience: the n-chain as a Heyting algebra value lattice.
LatticePtr chain_lattice(std::uint32_t n);

}  // namespace doctrina
