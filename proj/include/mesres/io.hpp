#pragma once

#include <string>

#include "mesres/network.hpp"

namespace mesres {

struct ParseError : Error {
  using Error::Error;
};

// Interchange format: a single JSON document with a mandatory schema_version
// field and one section per carrier plus the coupling points. Unknown fields
// are rejected to catch typos in hand-edited files.
std::string network_to_json(const MultiEnergyNetwork& net, int indent = 2);
MultiEnergyNetwork network_from_json(const std::string& text);

void save_network(const MultiEnergyNetwork& net, const std::string& path);
MultiEnergyNetwork load_network(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mesres
