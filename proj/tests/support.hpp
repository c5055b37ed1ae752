#pragma once

#include "sosg/synth_workload.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace support {

namespace fs = std::filesystem;

inline fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("sosg_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline sosg::FleetSpec small_fleet(std::uint32_t vms = 24) {
    sosg::FleetSpec s;
    s.n_hosts = 4;
    s.n_storage_hosts = 3;
    s.n_vms = vms;
    s.duration_hours = 1.0;
    return s;
}

inline const fs::path fixtures() { return SOSG_FIXTURES; }

}  // namespace support
