#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctrina/cofree.hpp"
#include "doctrina/doctrine.hpp"
#include "doctrina/generators.hpp"

namespace doctrina {

struct ParseError : std::runtime_error {
  std::string path;
  ParseError(std::string p, const std::string& msg)
      : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

struct DoctrineFile {
  std::shared_ptr<const Category> base;
  std::shared_ptr<Doctrine> doctrine;
  std::optional<GeneratorSpec> generator;  // set when expanded from a stanza
};

// Parses the documented JSON schema: either a generator stanza or explicit
// base/fiber/reindex tables (with optional certificates). Index references
// are range-checked; violations raise ParseError with the offending path.
DoctrineFile parse_doctrine(const std::string& text, const Caps& caps = {});
DoctrineFile load_doctrine(const std::string& filename, const Caps& caps = {});

// Serialises a doctrine with explicit tables; requires every fiber to be
// enumerable within the cap.
nlohmann::json serialize_doctrine(const Doctrine& d, const Caps& caps = {});
nlohmann::json serialize_generator(const GeneratorSpec& spec);
// Category-only file (extensional collapse output).
nlohmann::json serialize_category(const Category& c);

GeneratorSpec generator_from_json(const nlohmann::json& j);

// CLI driver; argv excludes the program name. Exit codes: 0 all checks hold,
// 1 some check fails, 2 malformed input, 3 size exceeded.
int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err);

}  // namespace doctrina
