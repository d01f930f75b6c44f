#pragma once

#include <map>
#include <string>

namespace chaosavg::detail {

struct CatalogId {
  std::string name;
  std::map<std::string, double> params;
};

// Parses "name" or "name:key=value,key=value". Throws invalid-config on
// malformed input.
CatalogId parse_catalog_id(const std::string& id);

// Removes and returns params[key] (or `fallback` when absent).
double take_param(CatalogId& id, const std::string& key, double fallback);

// Throws invalid-config if any parameter was not consumed.
void reject_leftover_params(const CatalogId& id, const std::string& full);

}  // namespace chaosavg::detail
