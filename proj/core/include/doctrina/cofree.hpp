#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "doctrina/doctrine.hpp"

namespace doctrina {

struct EquivalenceRelation {
  Obj obj = -1;
  Elem rho = 0;
};

// Reflexivity / symmetry / transitivity via the reindexing formulas; axioms
// whose tuple objects are missing are recorded as skipped, not failed.
StructureReport check_equivalence_relation(const Doctrine& P, Obj A, Elem rho,
                                           const Caps& caps = {});

// All equivalence relations on A in ascending element order. Requires the
// (A,A) product and an enumerable fiber.
std::vector<Elem> enumerate_equivalence_relations(const Doctrine& P, Obj A,
                                                  const Caps& caps = {});

struct QuotObject {
  Obj carrier = -1;
  Elem rho = 0;
};

// The category of equivalence relations: objects (A,ρ), morphisms the base
// morphisms respecting the relations, products (A×B, ρ⊠σ).
struct QuotCategory {
  std::shared_ptr<Category> cat;  // function-backed iff the base is
  std::vector<QuotObject> objects;
  std::vector<Mor> base_mor;  // per cat morphism
  std::vector<std::string> notes;

  std::optional<Obj> find_object(Obj carrier, Elem rho) const;
  std::optional<Mor> find_morphism(Obj qdom, Obj qcod, Mor base) const;
};

QuotCategory build_quotient_category(const Doctrine& P, const Caps& caps = {});

struct DescentFiber {
  std::vector<Elem> carrier;  // parent fiber elements, ascending
  LatticePtr lattice;         // table lattice on carrier indices

  std::optional<Elem> index_of(Elem parent) const;
};

// Des_ρ: elements with π1^*(α) ∧ ρ <= π2^*(α), as a sub-meet-semilattice of
// P(A) that keeps parent element identities.
DescentFiber descent_fiber(const Doctrine& P, Obj A, Elem rho,
                           const Caps& caps = {});
// Membership test only; works for fibers too large to enumerate.
bool descent_contains(const Doctrine& P, Obj A, Elem rho, Elem alpha);

class CofreeDoctrine : public Doctrine {
 public:
  CofreeDoctrine(DoctrinePtr parent, QuotCategory qc, const Caps& caps);

  const Category& base() const override { return *qc_.cat; }
  LatticePtr fiber(Obj q) const override;
  MonotoneMap reindex(Mor qf) const override;

  const QuotCategory& quot() const { return qc_; }
  const DoctrinePtr& parent() const { return parent_; }
  const DescentFiber& descent(Obj q) const;
  Elem to_parent(Obj q, Elem e) const;
  std::optional<Elem> from_parent(Obj q, Elem parent_elem) const;

 private:
  DoctrinePtr parent_;
  QuotCategory qc_;
  Caps caps_;
  mutable std::mutex mu_;
  mutable std::map<Obj, std::shared_ptr<DescentFiber>> cache_;
};

struct CofreeResult {
  std::shared_ptr<CofreeDoctrine> doctrine;
  ElementaryWitness delta;  // δ_{(A,ρ)} = ρ as a descent-fiber index
  StructureReport report;   // construction-time verifications
};

// The co-free elementary doctrine P_D over Q_P, with δ_{(A,ρ)} = ρ attached
// as the elementary certificate (and classifiers/comprehensions transported
// from the parent where available).
CofreeResult build_cofree_doctrine(DoctrinePtr P, const Caps& caps = {});

// ε_P = (U, i) : P_D -> P.
DoctrineMorphism counit_epsilon(const std::shared_ptr<CofreeDoctrine>& PD);

// ∇ ⊣ U: ∇ functorial, counit components are morphisms, factorizations unique.
StructureReport check_nabla_adjunction(const Doctrine& P,
                                       const ElementaryWitness& W,
                                       const QuotCategory& Q,
                                       const Caps& caps = {});

// Lifts (F,f): P -> R to (F_D, f_D): P_D -> R_D.
DoctrineMorphism lift_morphism(const DoctrineMorphism& M,
                               const std::shared_ptr<CofreeDoctrine>& PD,
                               const std::shared_ptr<CofreeDoctrine>& RD,
                               const Caps& caps = {});

// Counit universality of U ⊣ (-)_D for M : U(P) -> R: builds the factorization
// through R_D, verifies commutation, and scans for uniqueness within caps.
StructureReport check_counit_universal(const DoctrineMorphism& M,
                                       const ElementaryWitness& WP,
                                       const std::shared_ptr<CofreeDoctrine>& RD,
                                       const Caps& caps = {});

// The five preservation properties of the construction.
StructureReport check_preservation(const std::shared_ptr<CofreeDoctrine>& PD,
                                   const Caps& caps = {});

struct CofreePowerObject {
  Obj q_power = -1;     // (πA, rel) as a Q_P object
  Elem membership = 0;  // descent index over (A,ρ)×(πA,rel)
  StructureReport report;
};

// Weak power object of (A,ρ) in P_D per the ∀/⇔ formulas; for the terminal
// also verifies δ at π(1,⊤) against the ε₁ pseudo-complement form.
CofreePowerObject power_object_in_cofree(
    const std::shared_ptr<CofreeDoctrine>& PD, Obj q, const Caps& caps = {});

struct CollapseResult {
  std::shared_ptr<Category> cat;
  std::vector<Mor> clazz;  // base morphism -> collapsed morphism
  StructureReport report;
};

// Extensional collapse [C]: morphisms are identified when ⊤ <= ⟨t1,t2⟩^* δ.
CollapseResult extensional_collapse(const Doctrine& P,
                                    const ElementaryWitness& W,
                                    const Caps& caps = {});

}  // namespace doctrina
