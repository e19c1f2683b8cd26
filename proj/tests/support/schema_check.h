// Validates JSON against the subset of JSON Schema used by
// schemas/metric_report.schema.json: type, enum, required, properties,
// additionalProperties (boolean), minimum, maximum and local $ref.
#ifndef TEV_TESTS_SCHEMA_CHECK_H_
#define TEV_TESTS_SCHEMA_CHECK_H_

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace testkit {

class SchemaCheck {
 public:
  explicit SchemaCheck(nlohmann::json schema) : root_(std::move(schema)) {}

  static SchemaCheck load(const std::string &path) {
    std::ifstream in(path);
    return SchemaCheck(nlohmann::json::parse(in));
  }

  // Empty when valid; otherwise one message per problem.
  std::vector<std::string> errors(const nlohmann::json &doc) const {
    std::vector<std::string> out;
    check(root_, doc, "$", out);
    return out;
  }

 private:
  const nlohmann::json &resolve(const nlohmann::json &s) const {
    if (!s.contains("$ref")) return s;
    const std::string ref = s["$ref"];
    // Only "#/a/b" pointers into this document.
    return resolve(root_.at(nlohmann::json::json_pointer(ref.substr(1))));
  }

  static bool has_type(const nlohmann::json &v, const std::string &type) {
    if (type == "object") return v.is_object();
    if (type == "string") return v.is_string();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    if (type == "array") return v.is_array();
    if (type == "boolean") return v.is_boolean();
    return false;
  }

  void check(const nlohmann::json &schema_in, const nlohmann::json &v, const std::string &at,
             std::vector<std::string> &out) const {
    const nlohmann::json &s = resolve(schema_in);
    if (s.contains("type") && !has_type(v, s["type"])) {
      out.push_back(at + ": expected " + s["type"].get<std::string>());
      return;
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto &e : s["enum"]) found |= e == v;
      if (!found) out.push_back(at + ": value not in enum");
    }
    if (v.is_number()) {
      if (s.contains("minimum") && v.get<double>() < s["minimum"].get<double>()) {
        out.push_back(at + ": below minimum");
      }
      if (s.contains("maximum") && v.get<double>() > s["maximum"].get<double>()) {
        out.push_back(at + ": above maximum");
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto &key : s["required"]) {
          if (!v.contains(key.get<std::string>())) out.push_back(at + ": missing " + key.get<std::string>());
        }
      }
      const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
      for (const auto &[key, value] : v.items()) {
        if (s.contains("properties") && s["properties"].contains(key)) {
          check(s["properties"][key], value, at + "." + key, out);
        } else if (closed) {
          out.push_back(at + ": unexpected key " + key);
        }
      }
    }
  }

  nlohmann::json root_;
};

}  // namespace testkit

#endif  // TEV_TESTS_SCHEMA_CHECK_H_
