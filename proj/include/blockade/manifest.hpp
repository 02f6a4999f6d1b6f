#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "blockade/config.hpp"

namespace blockade {

inline constexpr const char* tool_version = "1.0.0";

/// Record of one CLI run. Written as a parameter file: the resolved settings
/// appear as ordinary keys and everything else under `run.`, so
/// `--config manifest.txt` with the same subcommand reproduces the run.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    RunSettings settings;
    std::vector<std::pair<std::string, std::string>> extra; ///< command-specific resolved options
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
    int exit_code = 0;
    std::string message;

    void write(std::ostream& out) const
    {
        out << "# blockade run manifest\n";
        out << "run.command = " << command << '\n';
        out << "run.version = " << tool_version << '\n';
        std::string line;
        for (const auto& a : argv) line += (line.empty() ? "" : " ") + a;
        out << "run.argv = " << line << '\n';
        for (const auto& [k, v] : extra) out << "run." << k << " = " << v << '\n';
        for (const auto& p : inputs) out << "run.input = " << p << '\n';
        for (const auto& p : outputs) out << "run.output = " << p << '\n';
        out << "run.wall_seconds = " << format_double(wall_seconds) << '\n';
        out << "run.exit_code = " << exit_code << '\n';
        if (!message.empty()) {
            std::string flat = message;
            for (char& c : flat)
                if (c == '\n' || c == '#') c = ' ';
            out << "run.message = " << flat << '\n';
        }
        for (const auto& [k, v] : settings.entries()) out << k << " = " << v << '\n';
    }

    void write(const std::filesystem::path& path) const
    {
        std::ofstream out(path);
        if (out) write(out);
    }
};

} // namespace blockade
