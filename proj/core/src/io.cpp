#include "doctrina/io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

namespace doctrina {

Caps Caps::from_env() {
  Caps c;
  if (const char* env = std::getenv("DOCTRINA_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) c.lattice = v;
  }
  return c;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
T field(const nlohmann::json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ParseError(path + "/" + key, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + "/" + key, e.what());
  }
}

void check_range(std::int64_t v, std::int64_t lo, std::int64_t hi,
                 const std::string& path) {
  if (v < lo || v >= hi)
    throw ParseError(path, "index " + std::to_string(v) + " out of range [" +
                               std::to_string(lo) + "," + std::to_string(hi) +
                               ")");
}

}  // namespace

GeneratorSpec generator_from_json(const nlohmann::json& g) {
  GeneratorSpec spec;
  spec.family = field<std::string>(g, "/generator", "family");
  if (g.contains("sizes"))
    spec.sizes = g.at("sizes").get<std::vector<std::int32_t>>();
  if (g.contains("cap")) spec.cap = g.at("cap").get<std::int32_t>();
  if (g.contains("homs")) spec.homs = g.at("homs").get<std::string>();
  if (g.contains("subsets")) spec.subset_closure = g.at("subsets").get<bool>();
  if (g.contains("chain")) spec.chain = g.at("chain").get<std::int32_t>();
  if (g.contains("spaces")) {
    for (std::size_t i = 0; i < g.at("spaces").size(); ++i) {
      const auto& sj = g.at("spaces")[i];
      SpaceSpec s;
      s.name = field<std::string>(sj, "/generator/spaces", "name");
      s.points = field<std::int32_t>(sj, "/generator/spaces", "points");
      if (sj.contains("order"))
        for (const auto& pr : sj.at("order"))
          s.order.emplace_back(pr.at(0).get<std::int32_t>(),
                               pr.at(1).get<std::int32_t>());
      spec.spaces.push_back(std::move(s));
    }
  }
  return spec;
}

nlohmann::json serialize_generator(const GeneratorSpec& spec) {
  nlohmann::json g;
  g["family"] = spec.family;
  if (!spec.sizes.empty()) g["sizes"] = spec.sizes;
  g["cap"] = spec.cap;
  g["homs"] = spec.homs;
  g["subsets"] = spec.subset_closure;
  if (spec.chain) g["chain"] = spec.chain;
  if (!spec.spaces.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : spec.spaces) {
      nlohmann::json sj;
      sj["name"] = s.name;
      sj["points"] = s.points;
      nlohmann::json ord = nlohmann::json::array();
      for (auto [x, y] : s.order) ord.push_back({x, y});
      sj["order"] = ord;
      arr.push_back(std::move(sj));
    }
    g["spaces"] = arr;
  }
  return nlohmann::json{{"format_version", 1}, {"generator", g}};
}

nlohmann::json serialize_category(const Category& c) {
  nlohmann::json base;
  {
    nlohmann::json objs = nlohmann::json::array();
    for (Obj a = 0; a < c.num_objects(); ++a) {
      nlohmann::json o;
      o["name"] = c.object_name(a);
      if (c.points(a) >= 0) o["points"] = c.points(a);
      objs.push_back(std::move(o));
    }
    base["objects"] = objs;
  }
  {
    nlohmann::json mors = nlohmann::json::array();
    for (Mor m = 0; m < c.num_morphisms(); ++m) {
      nlohmann::json mj;
      mj["name"] = c.morphism_name(m);
      mj["dom"] = c.dom(m);
      mj["cod"] = c.cod(m);
      if (!c.point_map(m).empty() || c.points(c.dom(m)) == 0)
        mj["table"] = c.point_map(m);
      mors.push_back(std::move(mj));
    }
    base["morphisms"] = mors;
  }
  {
    nlohmann::json ids = nlohmann::json::array();
    for (Obj a = 0; a < c.num_objects(); ++a) ids.push_back(c.identity(a));
    base["identities"] = ids;
  }
  {
    nlohmann::json comp = nlohmann::json::array();
    for (Mor g = 0; g < c.num_morphisms(); ++g)
      for (Mor f = 0; f < c.num_morphisms(); ++f)
        if (c.cod(f) == c.dom(g)) comp.push_back({g, f, c.compose(g, f)});
    base["composition"] = comp;
  }
  {
    nlohmann::json prods = nlohmann::json::array();
    for (Obj a = 0; a < c.num_objects(); ++a)
      for (Obj b = 0; b < c.num_objects(); ++b)
        if (auto p = c.product(a, b))
          prods.push_back({{"pair", {a, b}},
                           {"object", p->prod},
                           {"p1", p->p1},
                           {"p2", p->p2}});
    base["products"] = prods;
  }
  if (auto t = c.terminal()) base["terminal"] = *t;
  return base;
}

nlohmann::json serialize_doctrine(const Doctrine& d, const Caps& caps) {
  const Category& c = d.base();
  nlohmann::json out;
  out["format_version"] = 1;
  out["base"] = serialize_category(c);

  nlohmann::json fibers = nlohmann::json::array();
  std::vector<LatticePtr> fl;
  for (Obj a = 0; a < c.num_objects(); ++a) {
    auto l = d.fiber(a);
    if (l->size() > caps.lattice)
      throw SizeExceeded("fiber over " + c.object_name(a) +
                         " too large for explicit serialization");
    fl.push_back(l);
    nlohmann::json fj;
    nlohmann::json names = nlohmann::json::array();
    for (Elem e = 0; e < l->size(); ++e) names.push_back(l->element_name(e));
    fj["elements"] = names;
    fj["top"] = l->top();
    nlohmann::json leq = nlohmann::json::array();
    nlohmann::json meet = nlohmann::json::array();
    for (Elem x = 0; x < l->size(); ++x)
      for (Elem y = 0; y < l->size(); ++y) {
        if (l->leq(x, y)) leq.push_back({x, y});
        meet.push_back({x, y, l->meet(x, y)});
      }
    fj["leq"] = leq;
    fj["meet"] = meet;
    fibers.push_back(std::move(fj));
  }
  out["fibers"] = fibers;

  nlohmann::json re = nlohmann::json::array();
  for (Mor m = 0; m < c.num_morphisms(); ++m) {
    auto r = d.reindex(m);
    nlohmann::json tab = nlohmann::json::array();
    for (Elem e = 0; e < fl[c.cod(m)]->size(); ++e) tab.push_back(r(e));
    re.push_back(std::move(tab));
  }
  out["reindex"] = re;

  nlohmann::json certs;
  if (!d.certs().delta.empty()) {
    nlohmann::json dj;
    for (auto [a, e] : d.certs().delta) dj[std::to_string(a)] = e;
    certs["delta"] = dj;
  }
  if (!d.certs().power.empty()) {
    nlohmann::json pj;
    for (auto [a, w] : d.certs().power)
      pj[std::to_string(a)] = {{"object", w.power_obj},
                               {"membership", w.membership}};
    certs["power"] = pj;
  }
  if (d.certs().pi1) certs["pi1"] = *d.certs().pi1;
  if (d.certs().eps1) certs["eps1"] = *d.certs().eps1;
  if (d.certs().comprehend) {
    nlohmann::json cj;
    for (Obj a = 0; a < c.num_objects(); ++a) {
      nlohmann::json row;
      for (Elem e = 0; e < fl[a]->size(); ++e)
        if (auto m = d.certs().comprehend(a, e)) row[std::to_string(e)] = *m;
      if (!row.is_null()) cj[std::to_string(a)] = row;
    }
    certs["comprehensions"] = cj;
  }
  if (d.certs().classify) {
    nlohmann::json cj;
    for (Obj a = 0; a < c.num_objects(); ++a) {
      nlohmann::json arow;
      for (Obj b = 0; b < c.num_objects(); ++b) {
        auto p = c.product(a, b);
        if (!p) continue;
        nlohmann::json brow;
        for (Elem e = 0; e < fl[p->prod]->size(); ++e)
          if (auto m = d.certs().classify(a, b, e))
            brow[std::to_string(e)] = *m;
        if (!brow.is_null()) arow[std::to_string(b)] = brow;
      }
      if (!arow.is_null()) cj[std::to_string(a)] = arow;
    }
    certs["classifiers"] = cj;
  }
  if (!certs.is_null()) out["certificates"] = certs;
  return out;
}

DoctrineFile parse_doctrine(const std::string& text, const Caps& caps) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("/", e.what());
  }
  const int version = field<int>(j, "", "format_version");
  if (version != 1)
    throw ParseError("/format_version",
                     "unsupported version " + std::to_string(version));

  DoctrineFile out;
  if (j.contains("generator")) {
    if (j.contains("base"))
      throw ParseError(
          "/generator",
          "generator stanza and explicit tables are mutually exclusive");
    auto spec = generator_from_json(j.at("generator"));
    auto g = generate(spec, caps);
    out.base = g.base;
    out.doctrine = g.doctrine;
    out.generator = spec;
    return out;
  }
  if (!j.contains("base")) throw ParseError("/base", "missing field");

  const auto& bj = j.at("base");
  auto cat = std::make_shared<Category>();
  const auto& objs = bj.at("objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const auto& o = objs[i];
    cat->add_object(
        field<std::string>(o, "/base/objects", "name"),
        o.contains("points") ? o.at("points").get<std::int32_t>() : -1);
  }
  const auto& mors = bj.at("morphisms");
  for (std::size_t i = 0; i < mors.size(); ++i) {
    const auto& m = mors[i];
    const std::string path = "/base/morphisms/" + std::to_string(i);
    const Obj d = field<Obj>(m, path, "dom");
    const Obj c = field<Obj>(m, path, "cod");
    check_range(d, 0, cat->num_objects(), path + "/dom");
    check_range(c, 0, cat->num_objects(), path + "/cod");
    std::vector<std::int32_t> table;
    if (m.contains("table")) {
      table = m.at("table").get<std::vector<std::int32_t>>();
      if (cat->points(d) >= 0 && (std::int32_t)table.size() != cat->points(d))
        throw ParseError(path + "/table", "length != dom points");
      for (std::size_t k = 0; k < table.size(); ++k)
        check_range(table[k], 0, std::max(cat->points(c), 0),
                    path + "/table/" + std::to_string(k));
    }
    cat->add_morphism(
        d, c, std::move(table),
        m.contains("name") ? m.at("name").get<std::string>() : "");
  }
  {
    const auto& ids = bj.at("identities");
    if ((std::int32_t)ids.size() != cat->num_objects())
      throw ParseError("/base/identities", "one identity per object required");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Mor m = ids[i].get<Mor>();
      check_range(m, 0, cat->num_morphisms(),
                  "/base/identities/" + std::to_string(i));
      cat->set_identity((Obj)i, m);
    }
  }
  cat->seal();
  if (bj.contains("composition")) {
    const auto& comp = bj.at("composition");
    for (std::size_t i = 0; i < comp.size(); ++i) {
      const std::string path = "/base/composition/" + std::to_string(i);
      const Mor g = comp[i].at(0).get<Mor>();
      const Mor f = comp[i].at(1).get<Mor>();
      const Mor gf = comp[i].at(2).get<Mor>();
      check_range(g, 0, cat->num_morphisms(), path);
      check_range(f, 0, cat->num_morphisms(), path);
      check_range(gf, 0, cat->num_morphisms(), path);
      cat->set_compose(g, f, gf);
    }
  }
  if (bj.contains("products")) {
    const auto& prods = bj.at("products");
    for (std::size_t i = 0; i < prods.size(); ++i) {
      const std::string path = "/base/products/" + std::to_string(i);
      const auto& p = prods[i];
      const Obj a = p.at("pair").at(0).get<Obj>();
      const Obj b = p.at("pair").at(1).get<Obj>();
      Product pr;
      pr.prod = field<Obj>(p, path, "object");
      pr.p1 = field<Mor>(p, path, "p1");
      pr.p2 = field<Mor>(p, path, "p2");
      check_range(a, 0, cat->num_objects(), path);
      check_range(b, 0, cat->num_objects(), path);
      check_range(pr.prod, 0, cat->num_objects(), path + "/object");
      check_range(pr.p1, 0, cat->num_morphisms(), path + "/p1");
      check_range(pr.p2, 0, cat->num_morphisms(), path + "/p2");
      cat->declare_product(a, b, pr);
    }
  }
  if (bj.contains("terminal")) {
    const Obj t = bj.at("terminal").get<Obj>();
    check_range(t, 0, cat->num_objects(), "/base/terminal");
    cat->set_terminal(t);
  }

  std::vector<LatticePtr> fibers;
  if (!j.contains("fibers")) {
    // category-only file (e.g. collapse output): trivial fibers keep the
    // doctrine interface total
    for (Obj a = 0; a < cat->num_objects(); ++a)
      fibers.push_back(
          std::make_shared<MeetSemilattice>(MeetSemilattice::chain(1)));
    std::vector<std::vector<Elem>> re(cat->num_morphisms(),
                                      std::vector<Elem>{0});
    out.base = cat;
    out.doctrine =
        std::make_shared<TableDoctrine>(cat, std::move(fibers), std::move(re));
    return out;
  }
  const auto& fj = j.at("fibers");
  if ((std::int32_t)fj.size() != cat->num_objects())
    throw ParseError("/fibers", "one fiber per object required");
  for (std::size_t i = 0; i < fj.size(); ++i) {
    const std::string path = "/fibers/" + std::to_string(i);
    const auto& f = fj[i];
    std::vector<std::string> names;
    std::uint32_t n = 0;
    if (!f.contains("elements")) throw ParseError(path, "missing elements");
    if (f.at("elements").is_number()) {
      n = f.at("elements").get<std::uint32_t>();
    } else {
      names = f.at("elements").get<std::vector<std::string>>();
      n = (std::uint32_t)names.size();
    }
    std::vector<std::uint8_t> leq(std::size_t(n) * n, 0);
    for (const auto& pr : f.at("leq")) {
      const std::int64_t x = pr.at(0).get<std::int64_t>();
      const std::int64_t y = pr.at(1).get<std::int64_t>();
      check_range(x, 0, n, path + "/leq");
      check_range(y, 0, n, path + "/leq");
      leq[std::size_t(x) * n + y] = 1;
    }
    const std::uint32_t top = field<std::uint32_t>(f, path, "top");
    check_range(top, 0, n, path + "/top");
    auto lat = MeetSemilattice::from_leq(n, std::move(leq), top, names);
    if (!lat)
      throw ParseError(path,
                       "meet (greatest lower bound) undefined for some pair; "
                       "not a meet-semilattice");
    if (f.contains("meet")) {
      for (const auto& tr : f.at("meet")) {
        const Elem a = tr.at(0).get<Elem>();
        const Elem b = tr.at(1).get<Elem>();
        const Elem m = tr.at(2).get<Elem>();
        check_range((std::int64_t)a, 0, n, path + "/meet");
        check_range((std::int64_t)b, 0, n, path + "/meet");
        if (lat->meet(a, b) != m)
          throw ParseError(path + "/meet",
                           "given meet table disagrees with the order");
      }
    }
    fibers.push_back(std::make_shared<MeetSemilattice>(std::move(*lat)));
  }

  std::vector<std::vector<Elem>> re;
  const auto& rj = j.at("reindex");
  if ((std::int32_t)rj.size() != cat->num_morphisms())
    throw ParseError("/reindex", "one table per morphism required");
  for (std::size_t i = 0; i < rj.size(); ++i) {
    const std::string path = "/reindex/" + std::to_string(i);
    auto tab = rj[i].get<std::vector<Elem>>();
    const std::uint64_t expect = fibers[cat->cod((Mor)i)]->size();
    const std::uint64_t into = fibers[cat->dom((Mor)i)]->size();
    if (tab.size() != expect) throw ParseError(path, "table length != |P(cod)|");
    for (std::size_t k = 0; k < tab.size(); ++k)
      if (tab[k] >= into)
        throw ParseError(path + "/" + std::to_string(k),
                         "element index out of range");
    re.push_back(std::move(tab));
  }

  auto doc = std::make_shared<TableDoctrine>(cat, fibers, std::move(re));
  if (j.contains("certificates")) {
    const auto& cj = j.at("certificates");
    if (cj.contains("delta"))
      for (auto& [k, v] : cj.at("delta").items()) {
        const Obj a = (Obj)std::stol(k);
        check_range(a, 0, cat->num_objects(), "/certificates/delta");
        doc->certs().delta[a] = v.get<Elem>();
      }
    if (cj.contains("power"))
      for (auto& [k, v] : cj.at("power").items()) {
        const Obj a = (Obj)std::stol(k);
        check_range(a, 0, cat->num_objects(), "/certificates/power");
        doc->certs().power[a] = {v.at("object").get<Obj>(),
                                 v.at("membership").get<Elem>()};
      }
    if (cj.contains("pi1")) doc->certs().pi1 = cj.at("pi1").get<Obj>();
    if (cj.contains("eps1")) doc->certs().eps1 = cj.at("eps1").get<Elem>();
    if (cj.contains("comprehensions")) {
      auto table = std::make_shared<std::map<std::pair<Obj, Elem>, Mor>>();
      for (auto& [ak, row] : cj.at("comprehensions").items())
        for (auto& [ek, m] : row.items())
          (*table)[{(Obj)std::stol(ak), (Elem)std::stoull(ek)}] = m.get<Mor>();
      doc->certs().comprehend = [table](Obj a, Elem e) -> std::optional<Mor> {
        auto it = table->find({a, e});
        if (it == table->end()) return std::nullopt;
        return it->second;
      };
    }
    if (cj.contains("classifiers")) {
      auto table =
          std::make_shared<std::map<std::tuple<Obj, Obj, Elem>, Mor>>();
      for (auto& [ak, arow] : cj.at("classifiers").items())
        for (auto& [bk, brow] : arow.items())
          for (auto& [ek, m] : brow.items())
            (*table)[{(Obj)std::stol(ak), (Obj)std::stol(bk),
                      (Elem)std::stoull(ek)}] = m.get<Mor>();
      doc->certs().classify = [table](Obj a, Obj b,
                                      Elem e) -> std::optional<Mor> {
        auto it = table->find({a, b, e});
        if (it == table->end()) return std::nullopt;
        return it->second;
      };
    }
  }
  out.base = cat;
  out.doctrine = doc;
  return out;
}

DoctrineFile load_doctrine(const std::string& filename, const Caps& caps) {
  std::ifstream in(filename);
  if (!in) throw ParseError("/", "cannot open " + filename);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_doctrine(ss.str(), caps);
}

// --- CLI ------------------------------------------------------------------------

namespace {

struct CliState {
  Caps caps;
  std::string report_format = "json";
  bool no_timing = false;
  std::string input_text;
};

ElementaryOutcome acquire_witness(const Doctrine& P, bool force_find,
                                  const Caps& caps) {
  if (!force_find && !P.certs().delta.empty())
    return check_elementary(P, P.certs().delta, caps);
  return check_elementary(P, std::nullopt, caps);
}

StructureReport analyze_comprehensions(const Doctrine& P, const Caps& caps) {
  StructureReport rep;
  const Category& c = P.base();
  bool ok = true, full_ok = true;
  nlohmann::json w, fw;
  std::vector<std::string> skips;
  for (Obj a = 0; a < c.num_objects() && ok; ++a) {
    auto l = P.fiber(a);
    if (l->size() > caps.lattice) {
      skips.push_back("object " + c.object_name(a) + ": fiber beyond cap");
      continue;
    }
    for (Elem phi = 0; phi < l->size() && ok; ++phi) {
      auto r = find_comprehension(P, a, phi, caps);
      if (!r.mor) {
        ok = false;
        w = {{"object", a},
             {"object_name", c.object_name(a)},
             {"phi", phi},
             {"phi_name", l->element_name(phi)}};
      } else if (!r.full && full_ok) {
        full_ok = false;
        const auto* fe = r.report.find("comprehension.full");
        fw = fe ? fe->witness : nlohmann::json{{"object", a}, {"phi", phi}};
      }
    }
  }
  auto r1 = ok ? CheckResult::holds("comprehension.exists")
               : CheckResult::fails("comprehension.exists", w);
  r1.skipped = skips;
  rep.add(std::move(r1));
  rep.add(full_ok ? CheckResult::holds("comprehension.full")
                  : CheckResult::fails("comprehension.full", fw));
  return rep;
}

StructureReport analyze_power(const Doctrine& P, const Caps& caps) {
  StructureReport rep;
  const Category& c = P.base();
  if (P.certs().power.empty()) {
    rep.add(CheckResult::size_exceeded(
        "power.classified", "no power object certificates to check"));
    return rep;
  }
  for (auto& [a, cert] : P.certs().power) {
    auto r = check_weak_power_object(P, a, cert, caps);
    for (auto& e : r.checks) {
      e.check = "power.classified[" + c.object_name(a) + "]";
      rep.add(std::move(e));
    }
  }
  return rep;
}

StructureReport run_named_checks(const DoctrineFile& file,
                                 const std::vector<std::string>& which,
                                 bool force_find, const Caps& caps) {
  StructureReport rep;
  const auto& P = *file.doctrine;
  auto has = [&](const std::string& s) {
    return std::find(which.begin(), which.end(), s) != which.end();
  };
  if (has("validate")) {
    rep.merge(validate_category(P.base(), caps));
    rep.merge(validate_products(P.base(), caps));
    for (Obj a = 0; a < P.base().num_objects(); ++a) {
      auto l = P.fiber(a);
      auto sr = validate_semilattice(*l, caps);
      for (auto& e : sr.checks) {
        e.check += "[" + P.base().object_name(a) + "]";
        rep.add(std::move(e));
      }
    }
    rep.merge(validate_doctrine(P, caps));
  }
  if (has("elementary")) {
    auto out = acquire_witness(P, force_find, caps);
    rep.merge(out.report);
    if (out.witness) {
      nlohmann::json deltas;
      for (auto [a, e] : out.witness->delta) {
        auto p = P.base().product(a, a);
        deltas[P.base().object_name(a)] = {
            {"element", e}, {"name", P.fiber(p->prod)->element_name(e)}};
      }
      auto r = CheckResult::holds("elementary.witness");
      r.witness = deltas;  // informational payload on a holding check
      rep.add(std::move(r));
    }
  }
  if (has("existential"))
    rep.merge(check_quantifiers(P, AdjointSide::Left, caps));
  if (has("universal"))
    rep.merge(check_quantifiers(P, AdjointSide::Right, caps));
  if (has("implicational")) rep.merge(check_implicational(P, caps));
  if (has("joins")) rep.merge(check_joins(P, caps));
  if (has("comprehensions")) rep.merge(analyze_comprehensions(P, caps));
  if (has("power")) rep.merge(analyze_power(P, caps));
  if (has("extensional")) rep.merge(check_extensional_entailment(P, caps));
  return rep;
}

int exit_code_for(const StructureReport& rep) {
  if (rep.any_fails()) return 1;
  if (rep.any_size_exceeded()) return 3;
  return 0;
}

void emit(const CliState& st, const std::string& command,
          const StructureReport& rep, int exit_code, double ms,
          std::ostream& out) {
  if (st.report_format == "text") {
    out << "doctrina " << command << "\n" << rep.to_text();
    out << "exit: " << exit_code << "\n";
    if (!st.no_timing) out << "timing_ms: " << ms << "\n";
    return;
  }
  nlohmann::json j;
  j["tool"] = "doctrina";
  j["version"] = "0.1.0";
  j["command"] = command;
  char digest[32];
  std::snprintf(digest, sizeof digest, "%016llx",
                (unsigned long long)fnv1a(st.input_text));
  j["input_digest"] = digest;
  j["checks"] = rep.to_json();
  j["exit"] = exit_code;
  if (!st.no_timing) j["timing_ms"] = ms;
  out << j.dump(2) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{
      "finitely presented Lawvere doctrines: validation, structure checks, "
      "and the co-free elementary construction"};
  app.require_subcommand(1);

  CliState st;
  st.caps = Caps::from_env();
  std::uint64_t cap_flag = 0;
  std::string seed_order = "canonical";
  std::string replay;
  app.add_option("--cap", cap_flag, "size cap for fibers and scans");
  app.add_option("--report", st.report_format, "report format: json|text")
      ->check(CLI::IsMember({"json", "text"}));
  app.add_flag("--no-timing", st.no_timing,
               "omit timing fields (byte-deterministic output)");
  app.add_option("--seed-order", seed_order,
                 "candidate ordering (only canonical is defined)")
      ->check(CLI::IsMember({"canonical"}));
  app.add_option("--replay", replay, "replay a failure witness (json)");

  std::string file, outfile, which, family;
  std::string checks = "validate";
  bool find_elementary = false;
  std::uint64_t bound = 0;
  std::string gen_sizes = "1,2";
  std::int32_t gen_cap = 4;
  std::string gen_homs = "full";
  bool gen_no_subsets = false;
  std::int32_t gen_chain = 3;

  auto* validate = app.add_subcommand("validate", "well-formedness checks");
  validate->add_option("file", file)->required();

  auto* analyze = app.add_subcommand("analyze", "structure checks");
  analyze->add_option("file", file)->required();
  analyze->add_option("--check", checks,
                      "comma list: elementary,existential,universal,"
                      "implicational,joins,comprehensions,power,extensional");
  analyze->add_flag("--find-elementary", find_elementary,
                    "search for delta instead of trusting certificates");

  auto* cofree = app.add_subcommand("cofree", "emit the co-free doctrine");
  cofree->add_option("file", file)->required();
  cofree->add_option("-o,--output", outfile)->required();
  cofree->add_option("--bound", bound, "fiber bound for the construction");

  auto* preserve = app.add_subcommand("preserve", "preservation suite");
  preserve->add_option("file", file)->required();

  auto* adjunction = app.add_subcommand("adjunction", "adjunction checks");
  adjunction->add_option("file", file)->required();
  adjunction->add_option("--which", which, "nabla|counit")
      ->required()
      ->check(CLI::IsMember({"nabla", "counit"}));

  auto* collapse = app.add_subcommand("collapse", "extensional collapse");
  collapse->add_option("file", file)->required();
  collapse->add_option("-o,--output", outfile)->required();

  auto* gen = app.add_subcommand("gen", "generate a fixture doctrine");
  gen->add_option("family", family, "powerset|localic|topology|trivial")
      ->required();
  gen->add_option("-o,--output", outfile)->required();
  gen->add_option("--sizes", gen_sizes, "comma separated size list");
  gen->add_option("--cap", gen_cap, "object size cap");
  gen->add_option("--homs", gen_homs, "full|projective");
  gen->add_flag("--no-subsets", gen_no_subsets, "skip subset closure");
  gen->add_option("--chain", gen_chain, "Heyting chain length (localic)");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "argument error: " << e.what() << "\n";
    return 2;
  }
  if (cap_flag) st.caps.lattice = cap_flag;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };

  try {
    if (gen->parsed()) {
      GeneratorSpec spec;
      spec.family = family;
      spec.cap = gen_cap;
      spec.homs = gen_homs;
      spec.subset_closure = !gen_no_subsets;
      spec.chain = spec.family == "localic" ? gen_chain : 0;
      {
        std::stringstream ss(gen_sizes);
        std::string tok;
        while (std::getline(ss, tok, ','))
          if (!tok.empty()) spec.sizes.push_back(std::stoi(tok));
      }
      generate(spec, st.caps);  // expansion must succeed before writing
      std::ofstream o(outfile);
      if (!o) throw ParseError("/", "cannot write " + outfile);
      o << serialize_generator(spec).dump(2) << "\n";
      StructureReport rep;
      rep.add(CheckResult::holds("gen.expanded"));
      emit(st, "gen", rep, 0, elapsed(), out);
      return 0;
    }

    std::ifstream in(file);
    if (!in) {
      err << "cannot open " << file << "\n";
      return 2;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    st.input_text = ss.str();
    auto doc = parse_doctrine(st.input_text, st.caps);

    if (!replay.empty()) {
      nlohmann::json w;
      try {
        w = nlohmann::json::parse(replay);
      } catch (const nlohmann::json::exception& e) {
        err << "bad witness json: " << e.what() << "\n";
        return 2;
      }
      const std::string check = w.value("check", "");
      const std::string group = check.substr(0, check.find('.'));
      std::vector<std::string> sel;
      if (group == "semilattice" || group == "category" ||
          group == "products" || group == "doctrine")
        sel = {"validate"};
      else if (group == "elementary")
        sel = {"elementary"};
      else if (group == "existential" || group == "universal")
        sel = {group};
      else if (group == "implicational" || group == "joins")
        sel = {group};
      else if (group == "comprehension")
        sel = {"comprehensions"};
      else if (group == "power")
        sel = {"power"};
      else if (group == "extensional")
        sel = {"extensional"};
      else {
        err << "witness check group not replayable: " << group << "\n";
        return 2;
      }
      auto rep = run_named_checks(doc, sel, find_elementary, st.caps);
      bool reproduced = false;
      for (const auto& e : rep.checks)
        if (e.check == check && e.verdict == Verdict::Fails &&
            (!w.contains("witness") || e.witness == w.at("witness")))
          reproduced = true;
      StructureReport rr;
      rr.add(reproduced
                 ? CheckResult::fails("replay.reproduced", {{"check", check}})
                 : CheckResult::holds("replay.reproduced"));
      const int code = reproduced ? 1 : 0;
      emit(st, "replay", rr, code, elapsed(), out);
      return code;
    }

    if (validate->parsed()) {
      auto rep = run_named_checks(doc, {"validate"}, false, st.caps);
      const int code = exit_code_for(rep);
      emit(st, "validate", rep, code, elapsed(), out);
      return code;
    }
    if (analyze->parsed()) {
      std::vector<std::string> sel;
      std::stringstream cs(checks);
      std::string tok;
      while (std::getline(cs, tok, ','))
        if (!tok.empty()) sel.push_back(tok);
      if (find_elementary &&
          std::find(sel.begin(), sel.end(), "elementary") == sel.end())
        sel.push_back("elementary");
      auto rep = run_named_checks(doc, sel, find_elementary, st.caps);
      const int code = exit_code_for(rep);
      emit(st, "analyze", rep, code, elapsed(), out);
      return code;
    }
    if (cofree->parsed()) {
      Caps caps = st.caps;
      if (bound) caps.lattice = bound;
      auto res = build_cofree_doctrine(doc.doctrine, caps);
      auto j = serialize_doctrine(*res.doctrine, caps);
      std::ofstream o(outfile);
      if (!o) throw ParseError("/", "cannot write " + outfile);
      o << j.dump(2) << "\n";
      const int code = exit_code_for(res.report);
      emit(st, "cofree", res.report, code, elapsed(), out);
      return code;
    }
    if (preserve->parsed()) {
      auto res = build_cofree_doctrine(doc.doctrine, st.caps);
      auto rep = res.report;
      rep.merge(check_preservation(res.doctrine, st.caps));
      const int code = exit_code_for(rep);
      emit(st, "preserve", rep, code, elapsed(), out);
      return code;
    }
    if (adjunction->parsed()) {
      auto wit = acquire_witness(*doc.doctrine, false, st.caps);
      StructureReport rep = wit.report;
      if (wit.witness) {
        if (which == "nabla") {
          auto q = build_quotient_category(*doc.doctrine, st.caps);
          rep.merge(
              check_nabla_adjunction(*doc.doctrine, *wit.witness, q, st.caps));
        } else {
          auto res = build_cofree_doctrine(doc.doctrine, st.caps);
          rep.merge(res.report);
          auto id = DoctrineMorphism::identity(doc.doctrine);
          rep.merge(
              check_counit_universal(id, *wit.witness, res.doctrine, st.caps));
        }
      }
      const int code = exit_code_for(rep);
      emit(st, "adjunction", rep, code, elapsed(), out);
      return code;
    }
    if (collapse->parsed()) {
      auto wit = acquire_witness(*doc.doctrine, false, st.caps);
      StructureReport rep = wit.report;
      int code;
      if (wit.witness) {
        auto res = extensional_collapse(*doc.doctrine, *wit.witness, st.caps);
        rep.merge(res.report);
        code = exit_code_for(rep);
        if (!rep.any_fails()) {
          nlohmann::json j;
          j["format_version"] = 1;
          j["base"] = serialize_category(*res.cat);
          std::ofstream o(outfile);
          if (!o) throw ParseError("/", "cannot write " + outfile);
          o << j.dump(2) << "\n";
        }
      } else {
        code = exit_code_for(rep);
      }
      emit(st, "collapse", rep, code, elapsed(), out);
      return code;
    }
  } catch (const ParseError& e) {
    err << "parse error at " << e.what() << "\n";
    return 2;
  } catch (const SizeExceeded& e) {
    err << "size exceeded: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace doctrina
