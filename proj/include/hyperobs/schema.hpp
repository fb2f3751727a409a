#pragma once

#include "hyperobs/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace hyperobs {

/// JSON schema of experiment configuration files.
inline const char* experiment_schema_text()
{
	return R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "hyperobs experiment",
  "type": "object",
  "additionalProperties": false,
  "required": ["hypergraph", "dynamics"],
  "properties": {
    "name": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "hypergraph": {
      "type": "object",
      "additionalProperties": false,
      "minProperties": 1,
      "properties": {
        "inline": {"$ref": "#/$defs/hypergraph"},
        "file": {"type": "string"},
        "generator": {"$ref": "#/$defs/generator"},
        "largest_component": {"type": "boolean"}
      },
      "oneOf": [
        {"required": ["inline"]},
        {"required": ["file"]},
        {"required": ["generator"]}
      ]
    },
    "dynamics": {
      "type": "object",
      "additionalProperties": false,
      "required": ["vector_field", "coupling", "output"],
      "properties": {
        "vector_field": {
          "type": "object",
          "additionalProperties": false,
          "required": ["field"],
          "properties": {
            "field": {"enum": ["lorenz", "bistable"]},
            "params": {"type": "array", "items": {"type": "number"}}
          }
        },
        "coupling": {
          "type": "object",
          "additionalProperties": false,
          "required": ["coupling", "params"],
          "properties": {
            "coupling": {"enum": ["tanh"]},
            "params": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
          }
        },
        "output": {
          "type": "object",
          "additionalProperties": false,
          "required": ["matrix"],
          "properties": {
            "matrix": {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
          }
        }
      }
    },
    "initial_box": {"$ref": "#/$defs/box"},
    "design": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "margin": {"type": "number", "exclusiveMinimum": 0},
        "rho": {"type": "number", "exclusiveMinimum": 0},
        "max_iters": {"type": "integer", "minimum": 1},
        "restarts": {"type": "integer", "minimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "kronecker_cap": {"type": "integer", "minimum": 1},
        "use_theorem1": {"type": "boolean"},
        "invertible_shortcut": {"type": "boolean"},
        "shortcut_margin": {"type": "number", "exclusiveMinimum": 0},
        "allowed_measurements": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "sample_stride": {"type": "integer", "minimum": 1},
        "working_set": {"type": "integer", "minimum": 1},
        "trajectories": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "count": {"type": "integer", "minimum": 1},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "stride": {"type": "integer", "minimum": 1},
            "box": {"$ref": "#/$defs/box"}
          }
        }
      }
    },
    "sim": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "runs": {"type": "integer", "minimum": 1},
        "ic_spread": {"type": "number", "minimum": 0},
        "noise": {"type": "number", "minimum": 0},
        "param_spread": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "record_stride": {"type": "integer", "minimum": 1},
        "max_rows": {"type": "integer", "minimum": 2},
        "box": {"$ref": "#/$defs/box"}
      }
    },
    "batch": {
      "type": "object",
      "additionalProperties": false,
      "required": ["variable", "values"],
      "properties": {
        "variable": {"enum": ["ic_spread", "noise", "param_spread"]},
        "values": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "scale": {"type": "number", "minimum": 0}
      }
    }
  },
  "$defs": {
    "box": {
      "type": "object",
      "additionalProperties": false,
      "required": ["lo", "hi"],
      "properties": {
        "lo": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "hi": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "transient": {"type": "number", "minimum": 0}
      }
    },
    "hypergraph": {
      "type": "object",
      "additionalProperties": false,
      "required": ["num_nodes", "edges"],
      "properties": {
        "num_nodes": {"type": "integer", "minimum": 0},
        "edges": {
          "type": "array",
          "items": {
            "type": "object",
            "additionalProperties": false,
            "required": ["tails", "heads"],
            "properties": {
              "tails": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
              "heads": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
              "alpha": {"type": "array", "items": {"type": "number"}},
              "beta": {"type": "array", "items": {"type": "number"}},
              "sigma": {"type": "number", "exclusiveMinimum": 0}
            }
          }
        }
      }
    },
    "generator": {
      "type": "object",
      "additionalProperties": false,
      "required": ["layer_sizes", "cardinality", "src_intra", "snk_intra", "src_inter", "snk_inter", "seed"],
      "properties": {
        "layer_sizes": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "cardinality": {"type": "integer", "minimum": 2},
        "src_intra": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "snk_intra": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "src_inter": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "snk_inter": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "seed": {"type": "integer", "minimum": 0},
        "sigma": {"type": "number", "exclusiveMinimum": 0}
      }
    }
  }
})json";
}

/**
 * Validator for the JSON-schema subset used by the experiment schema: type,
 * enum, properties, required, additionalProperties (boolean), min/max
 * properties, items, min/maxItems, minimum, maximum, exclusive bounds, oneOf
 * and local $ref.
 */
class SchemaValidator {
public:
	explicit SchemaValidator(nlohmann::json schema) : root_(std::move(schema)) {}

	/// All violations, each prefixed with a JSON pointer to the offending value.
	std::vector<std::string> errors(const nlohmann::json& doc, const std::string& def = "") const
	{
		std::vector<std::string> out;
		check(def.empty() ? root_ : root_.at(nlohmann::json::json_pointer(def)), doc, "", out);
		return out;
	}

	/// Throws ConfigError listing every violation. `def` optionally selects a
	/// sub-schema by JSON pointer (e.g. "/$defs/generator").
	void validate(const nlohmann::json& doc, const std::string& def = "") const
	{
		const auto e = errors(doc, def);
		if (!e.empty()) {
			std::string msg = "configuration does not match the schema:";
			for (const auto& s : e)
				msg += "\n  " + s;
			throw Error(ErrorKind::ConfigError, msg);
		}
	}

private:
	const nlohmann::json& resolve(const nlohmann::json& s) const
	{
		if (s.is_object() && s.contains("$ref")) {
			const std::string ref = s["$ref"];
			if (ref.rfind("#", 0) != 0)
				throw Error(ErrorKind::ConfigError, "only local schema references are supported");
			return root_.at(nlohmann::json::json_pointer(ref.substr(1)));
		}
		return s;
	}

	static bool has_type(const nlohmann::json& v, const std::string& t)
	{
		if (t == "object") return v.is_object();
		if (t == "array") return v.is_array();
		if (t == "string") return v.is_string();
		if (t == "boolean") return v.is_boolean();
		if (t == "null") return v.is_null();
		if (t == "number") return v.is_number();
		if (t == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
		return false;
	}

	void check(const nlohmann::json& schema_in, const nlohmann::json& v, const std::string& path, std::vector<std::string>& out) const
	{
		const nlohmann::json& s = resolve(schema_in);
		const std::string where = path.empty() ? "/" : path;
		if (s.contains("type")) {
			bool ok = false;
			if (s["type"].is_array()) {
				for (const auto& t : s["type"])
					ok = ok || has_type(v, t.get<std::string>());
			} else {
				ok = has_type(v, s["type"].get<std::string>());
			}
			if (!ok) {
				out.push_back(where + ": expected type " + s["type"].dump());
				return;
			}
		}
		if (s.contains("enum")) {
			bool ok = false;
			for (const auto& e : s["enum"])
				ok = ok || e == v;
			if (!ok)
				out.push_back(where + ": value " + v.dump() + " not in " + s["enum"].dump());
		}
		if (v.is_number()) {
			const double x = v.get<double>();
			if (s.contains("minimum") && x < s["minimum"].get<double>())
				out.push_back(where + ": below minimum " + s["minimum"].dump());
			if (s.contains("maximum") && x > s["maximum"].get<double>())
				out.push_back(where + ": above maximum " + s["maximum"].dump());
			if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>())
				out.push_back(where + ": must exceed " + s["exclusiveMinimum"].dump());
			if (s.contains("exclusiveMaximum") && x >= s["exclusiveMaximum"].get<double>())
				out.push_back(where + ": must be below " + s["exclusiveMaximum"].dump());
		}
		if (v.is_array()) {
			if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
				out.push_back(where + ": fewer than " + s["minItems"].dump() + " items");
			if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>())
				out.push_back(where + ": more than " + s["maxItems"].dump() + " items");
			if (s.contains("items"))
				for (std::size_t k = 0; k < v.size(); ++k)
					check(s["items"], v[k], path + "/" + std::to_string(k), out);
		}
		if (v.is_object()) {
			if (s.contains("required"))
				for (const auto& r : s["required"])
					if (!v.contains(r.get<std::string>()))
						out.push_back(where + ": missing required key \"" + r.get<std::string>() + "\"");
			if (s.contains("minProperties") && v.size() < s["minProperties"].get<std::size_t>())
				out.push_back(where + ": too few keys");
			if (s.contains("maxProperties") && v.size() > s["maxProperties"].get<std::size_t>())
				out.push_back(where + ": too many keys");
			const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
			for (auto it = v.begin(); it != v.end(); ++it) {
				if (s.contains("properties") && s["properties"].contains(it.key()))
					check(s["properties"][it.key()], it.value(), path + "/" + it.key(), out);
				else if (closed)
					out.push_back(where + ": unknown key \"" + it.key() + "\"");
			}
		}
		if (s.contains("oneOf")) {
			std::size_t matches = 0;
			for (const auto& alt : s["oneOf"]) {
				std::vector<std::string> tmp;
				check(alt, v, path, tmp);
				matches += tmp.empty() ? 1 : 0;
			}
			if (matches != 1)
				out.push_back(where + ": must match exactly one alternative (matched " + std::to_string(matches) + ")");
		}
	}

	nlohmann::json root_;
};

inline const SchemaValidator& experiment_validator()
{
	static const SchemaValidator v(nlohmann::json::parse(experiment_schema_text()));
	return v;
}

} // namespace hyperobs
