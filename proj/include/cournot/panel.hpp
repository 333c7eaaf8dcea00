#pragma once

// Panel containers and CSV round-trips. Observed data is (p_t, q_t1..q_tn);
// the simulator can additionally emit the latent draws for oracle checks.
// CSV schema: header "t,p,q1,...,qn"; latent sidecar "t,u,w,v1,...,vn".

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cournot/common.hpp"

namespace cournot {

struct Panel {
    std::vector<double> p;                 // price per period
    std::vector<std::vector<double>> q;    // outputs per period, inner size n

    std::size_t T() const { return p.size(); }
    std::size_t n_firms() const { return q.empty() ? 0 : q.front().size(); }

    double q_plus(std::size_t t) const {
        double s = 0.0;
        for (double v : q[t]) s += v;
        return s;
    }
    double q_rivals(std::size_t t, std::size_t i) const { return q_plus(t) - q[t][i]; }

    void validate() const {
        require(p.size() == q.size(), "Panel: p and q length mismatch");
        require(!q.empty(), "Panel: empty");
        std::size_t n = q.front().size();
        require(n >= 1, "Panel: no firms");
        for (const auto& row : q)
            require(row.size() == n, "Panel: ragged output rows");
    }
};

struct LatentPanel {
    std::vector<double> u, w;
    std::vector<std::vector<double>> v;
    std::size_t T() const { return u.size(); }
};

namespace detail {

inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace detail

inline void write_panel_csv(const Panel& panel, const std::string& path) {
    panel.validate();
    std::ofstream f(path);
    require(f.good(), "write_panel_csv: cannot open " + path);
    f << "t,p";
    for (std::size_t i = 1; i <= panel.n_firms(); ++i) f << ",q" << i;
    f << "\n";
    for (std::size_t t = 0; t < panel.T(); ++t) {
        f << (t + 1) << "," << detail::fmt_double(panel.p[t]);
        for (double v : panel.q[t]) f << "," << detail::fmt_double(v);
        f << "\n";
    }
}

inline void write_latent_csv(const LatentPanel& lat, const std::string& path) {
    std::ofstream f(path);
    require(f.good(), "write_latent_csv: cannot open " + path);
    std::size_t n = lat.v.empty() ? 0 : lat.v.front().size();
    f << "t,u,w";
    for (std::size_t i = 1; i <= n; ++i) f << ",v" << i;
    f << "\n";
    for (std::size_t t = 0; t < lat.T(); ++t) {
        f << (t + 1) << "," << detail::fmt_double(lat.u[t]) << ","
          << detail::fmt_double(lat.w[t]);
        for (double v : lat.v[t]) f << "," << detail::fmt_double(v);
        f << "\n";
    }
}

inline Panel read_panel_csv(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_panel_csv: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "read_panel_csv: empty file");
    auto header = detail::split_csv_line(line);
    require(header.size() >= 3 && header[0] == "t" && header[1] == "p",
            "read_panel_csv: expected header t,p,q1,...");
    std::size_t n = header.size() - 2;
    for (std::size_t i = 0; i < n; ++i)
        require(header[2 + i] == "q" + std::to_string(i + 1),
                "read_panel_csv: malformed quantity columns");
    Panel panel;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        require(cells.size() == header.size(), "read_panel_csv: ragged row");
        panel.p.push_back(std::stod(cells[1]));
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i) row[i] = std::stod(cells[2 + i]);
        panel.q.push_back(std::move(row));
    }
    panel.validate();
    return panel;
}

inline LatentPanel read_latent_csv(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_latent_csv: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "read_latent_csv: empty file");
    auto header = detail::split_csv_line(line);
    require(header.size() >= 4 && header[0] == "t" && header[1] == "u" && header[2] == "w",
            "read_latent_csv: expected header t,u,w,v1,...");
    std::size_t n = header.size() - 3;
    LatentPanel lat;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        require(cells.size() == header.size(), "read_latent_csv: ragged row");
        lat.u.push_back(std::stod(cells[1]));
        lat.w.push_back(std::stod(cells[2]));
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i) row[i] = std::stod(cells[3 + i]);
        lat.v.push_back(std::move(row));
    }
    return lat;
}

}  // namespace cournot
