#pragma once

#include <charconv>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qdcav/device.hpp"
#include "qdcav/errors.hpp"

// Plain-text data exchange: whitespace/comma separated numeric columns with
// '#' comments on the way in, CSV with full double precision on the way out.

namespace qdcav {

struct ColumnData {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> comments;  // text after '#', trimmed
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& tok, int line, int col) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ConfigError("cannot parse '" + tok + "' as a number", line, col);
  return v;
}

}  // namespace detail

inline ColumnData read_columns(const std::filesystem::path& path, std::size_t ncols) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  ColumnData out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = line;
    if (auto hash = body.find('#'); hash != std::string::npos) {
      std::string comment = detail::trim(body.substr(hash + 1));
      if (!comment.empty()) out.comments.push_back(comment);
      body = body.substr(0, hash);
    }
    body = detail::trim(body);
    if (body.empty()) continue;

    std::vector<double> row;
    std::size_t pos = 0;
    while (pos < body.size()) {
      while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t' || body[pos] == ',')) ++pos;
      if (pos >= body.size()) break;
      std::size_t end = pos;
      while (end < body.size() && body[end] != ' ' && body[end] != '\t' && body[end] != ',') ++end;
      row.push_back(detail::parse_double(body.substr(pos, end - pos), lineno, int(pos) + 1));
      pos = end;
    }
    if (row.size() != ncols)
      throw ConfigError("expected " + std::to_string(ncols) + " columns, found " +
                            std::to_string(row.size()),
                        lineno, 1);
    out.rows.push_back(std::move(row));
  }
  return out;
}

// (t_ns, value) traces: waveforms, sampled schedules, spectra
inline std::pair<std::vector<double>, std::vector<double>> read_two_columns(
    const std::filesystem::path& path) {
  ColumnData data = read_columns(path, 2);
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& r : data.rows) {
    out.first.push_back(r[0]);
    out.second.push_back(r[1]);
  }
  return out;
}

// Reflection data: three columns, either (f_GHz, Re, Im) or, when the file
// carries a "# format: magphase" comment (or the caller forces it),
// (f_GHz, magnitude_dB, phase_deg).
enum class S11Format { auto_detect, re_im, mag_phase };

inline std::vector<S11Sample> read_s11_file(const std::filesystem::path& path,
                                            S11Format format = S11Format::auto_detect) {
  ColumnData data = read_columns(path, 3);
  if (format == S11Format::auto_detect) {
    format = S11Format::re_im;
    for (const auto& c : data.comments) {
      std::string lc;
      for (char ch : c) lc.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
      if (lc.find("format") != std::string::npos) {
        if (lc.find("magphase") != std::string::npos || lc.find("mag_phase") != std::string::npos)
          format = S11Format::mag_phase;
        else if (lc.find("reim") != std::string::npos || lc.find("re_im") != std::string::npos)
          format = S11Format::re_im;
        else
          throw ConfigError("unrecognized format comment '" + c + "' in '" + path.string() + "'");
      }
    }
  }
  std::vector<S11Sample> out;
  for (const auto& r : data.rows) {
    S11Sample s;
    s.f_ghz = r[0];
    if (format == S11Format::mag_phase) {
      double mag = std::pow(10.0, r[1] / 20.0);
      double ph = r[2] * pi / 180.0;
      s.value = Complex(mag * std::cos(ph), mag * std::sin(ph));
    } else {
      s.value = Complex(r[1], r[2]);
    }
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// output side

// shortest exact decimal form: 17 significant digits round-trip any double
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<const std::vector<double>*>& columns) {
  if (header.size() != columns.size()) throw DomainError("CSV header/column count mismatch");
  std::size_t n = columns.empty() ? 0 : columns.front()->size();
  for (const auto* c : columns)
    if (c->size() != n) throw DomainError("CSV columns differ in length");

  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  out += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out += ',';
      out += format_double((*columns[j])[i]);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f.write(out.data(), std::streamsize(out.size()));
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

}  // namespace qdcav
