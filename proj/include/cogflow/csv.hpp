// Deterministic CSV emission. Fields never need quoting here, so the writer
// refuses any cell that would require it instead of quoting silently.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cogflow/errors.hpp"
#include "cogflow/format.hpp"

namespace cogflow {

class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header) { emit_row(header); }

    CsvBuilder& row(const std::vector<std::string>& cells) {
        emit_row(cells);
        return *this;
    }

    const std::string& text() const { return text_; }

private:
    void emit_row(const std::vector<std::string>& cells) {
        if (cells.empty()) throw ContractError("csv row must have at least one field");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& cell = cells[i];
            if (cell.find_first_of(",\"\n\r") != std::string::npos)
                throw ContractError("csv field needs quoting, which is unsupported: '" + cell +
                                    "'");
            if (i > 0) text_ += ',';
            text_ += cell;
        }
        text_ += '\n';
    }

    std::string text_;
};

// Forward declaration lives in integrator.hpp; included where both are used.
struct Trajectory;

template <typename Traj>
std::string trajectory_csv_text(const Traj& traj) {
    const std::size_t n = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states[0].size());
    std::vector<std::string> header{"t"};
    for (std::size_t i = 1; i <= n; ++i) header.push_back("eta_" + std::to_string(i));
    header.push_back("J");
    for (std::size_t i = 1; i <= n; ++i) header.push_back("v_" + std::to_string(i));
    CsvBuilder csv(header);
    for (std::size_t r = 0; r < traj.size(); ++r) {
        std::vector<std::string> cells{format_double(traj.times[r])};
        for (std::size_t i = 0; i < n; ++i) cells.push_back(format_double(traj.states[r][static_cast<long>(i)]));
        cells.push_back(format_double(traj.potential_values[r]));
        for (std::size_t i = 0; i < n; ++i)
            cells.push_back(format_double(traj.velocities[r][static_cast<long>(i)]));
        csv.row(cells);
    }
    return csv.text();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace cogflow
