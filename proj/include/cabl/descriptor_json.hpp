#pragma once

// Machine-descriptor documents are flat JSON:
//
//   {
//     "element_bytes": 8,
//     "cores": 8,
//     "levels": [
//       {"line_bytes": 64, "associativity": 8, "num_sets": 64,   "shared": false},
//       {"line_bytes": 64, "associativity": 8, "num_sets": 1024, "shared": true}
//     ]
//   }
//
// Levels are listed L1 outward. The same loader backs the library and the
// bench CLI.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "machine.hpp"

namespace cabl {

inline MachineDescriptor load_descriptor(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DescriptorError(std::string("descriptor parse failure: ") + e.what());
    }

    MachineDescriptor machine;
    try {
        machine.element_bytes = doc.at("element_bytes").get<std::uint64_t>();
        machine.cores = doc.at("cores").get<unsigned>();
        for (const auto& lv : doc.at("levels")) {
            CacheLevel level;
            level.line_bytes = lv.at("line_bytes").get<std::uint64_t>();
            level.associativity = lv.at("associativity").get<std::uint64_t>();
            level.num_sets = lv.at("num_sets").get<std::uint64_t>();
            level.shared = lv.at("shared").get<bool>();
            machine.levels.push_back(level);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DescriptorError(std::string("descriptor parse failure: ") + e.what());
    }

    validate_machine(machine);
    return machine;
}

inline MachineDescriptor load_descriptor_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DescriptorError("cannot open descriptor file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_descriptor(buf.str());
}

} // namespace cabl
