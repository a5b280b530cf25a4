#include "json_config.hpp"

#include <json.hpp>

namespace hybrid_spkr::cli {
namespace {

using Json = nlohmann::ordered_json;

std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void flatten(const Json& obj, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
  for (const auto& [key, value] : obj.items()) {
    if (value.is_object()) {
      parents.push_back(key);
      flatten(value, parents, out);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar_text(v));
    } else {
      item.inputs.push_back(scalar_text(value));
    }
    out.push_back(std::move(item));
  }
}

void dump_app(const CLI::App* app, bool default_also, Json& into) {
  for (const CLI::Option* opt : app->get_options()) {
    if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (results.size() == 1) {
        into[name] = results.front();
      } else {
        into[name] = results;
      }
    } else if (default_also && !opt->get_default_str().empty()) {
      into[name] = opt->get_default_str();
    }
  }
  for (const CLI::App* sub : app->get_subcommands({})) {
    Json child = Json::object();
    dump_app(sub, default_also, child);
    if (!child.empty()) into[sub->get_name()] = std::move(child);
  }
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  Json j = Json::object();
  dump_app(app, default_also, j);
  return j.dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  Json j;
  try {
    j = Json::parse(input);
  } catch (const Json::exception& e) {
    throw CLI::ConversionError("config", e.what());
  }
  if (!j.is_object()) throw CLI::ConversionError("config", "top level must be a JSON object");
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  flatten(j, parents, items);
  return items;
}

}  // namespace hybrid_spkr::cli
