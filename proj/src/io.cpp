#include "lcl/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace lcl::io {

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf;
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    return std::string(buf.data(), r.ptr);
}

std::string format_shortest(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf;
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    std::string s(buf.data(), r.ptr);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
    for (const auto& h : header) field(h);
    end_row();
}

CsvWriter& CsvWriter::field(const std::string& text) {
    if (in_row_ > 0) text_ += ',';
    if (text.find_first_of(",\"\r\n") != std::string::npos) {
        text_ += '"';
        for (char c : text) {
            if (c == '"') text_ += '"';
            text_ += c;
        }
        text_ += '"';
    } else {
        text_ += text;
    }
    ++in_row_;
    return *this;
}

CsvWriter& CsvWriter::field(double x) { return field(format_real(x)); }

CsvWriter& CsvWriter::field(const std::optional<double>& x) { return field(x ? format_real(*x) : std::string()); }

CsvWriter& CsvWriter::field(std::size_t x) { return field(std::to_string(x)); }

CsvWriter& CsvWriter::field(bool x) { return field(std::string(x ? "true" : "false")); }

void CsvWriter::end_row() {
    if (in_row_ != columns_) {
        throw IoError("csv row has " + std::to_string(in_row_) + " fields, header has " + std::to_string(columns_));
    }
    text_ += "\r\n";
    in_row_ = 0;
}

CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string fieldbuf;
    std::vector<std::size_t> record_lines;  // line on which each record starts
    std::size_t line = 1;
    std::size_t record_line = 1;
    std::size_t i = 0;
    bool any = false;  // the current record has content
    const std::size_t n = text.size();
    auto finish_record = [&] {
        record.push_back(std::move(fieldbuf));
        fieldbuf.clear();
        records.push_back(std::move(record));
        record_lines.push_back(record_line);
        record.clear();
        any = false;
    };
    while (i < n) {
        const char c = text[i];
        if (c == '"' && fieldbuf.empty()) {
            const std::size_t start_line = line;
            ++i;
            for (;;) {
                if (i >= n) throw IoError("csv: unterminated quoted field starting on line " + std::to_string(start_line));
                if (text[i] == '"') {
                    if (i + 1 < n && text[i + 1] == '"') {
                        fieldbuf += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                if (text[i] == '\n') ++line;
                fieldbuf += text[i++];
            }
            any = true;
            if (i < n && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
                throw IoError("csv: text after closing quote on line " + std::to_string(line));
            }
            continue;
        }
        if (c == ',') {
            record.push_back(std::move(fieldbuf));
            fieldbuf.clear();
            any = true;
            ++i;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
            ++i;
            if (any || !fieldbuf.empty()) finish_record();
            ++line;
            record_line = line;
        } else {
            if (c == '"') throw IoError("csv: stray quote on line " + std::to_string(line));
            fieldbuf += c;
            any = true;
            ++i;
        }
    }
    if (any || !fieldbuf.empty()) finish_record();
    if (records.empty()) throw IoError("csv: no header");
    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            throw IoError("csv: line " + std::to_string(record_lines[r]) + ": record has " +
                          std::to_string(records[r].size()) + " fields, header has " +
                          std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::filesystem::create_directories(dir);
    const std::filesystem::path tmp =
        dir / ("." + path.filename().string() + ".tmp." + std::to_string(static_cast<long>(::getpid())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    CsvWriter w(kTrajectoryColumns);
    for (const auto& r : rows) {
        w.field(r.t).field(r.mass).field(r.momentum(0)).field(r.momentum(1)).field(r.momentum(2)).field(r.energy);
        w.field(r.entropy).field(r.linf).field(r.rho_hat).field(r.w2).field(r.skipped_pairs);
        w.end_row();
    }
    return w.text();
}

std::string snapshot_csv(const std::vector<Velocity>& velocities) {
    CsvWriter w(kSnapshotColumns);
    for (const auto& v : velocities) {
        w.field(v(0)).field(v(1)).field(v(2));
        w.end_row();
    }
    return w.text();
}

std::string residual_csv(const std::vector<WeakResidual>& residuals) {
    CsvWriter w(kResidualColumns);
    for (const auto& r : residuals) {
        w.field(r.phi).field(r.t0).field(r.t1).field(r.lhs).field(r.rhs).field(r.residual).field(r.stderr_);
        w.end_row();
    }
    return w.text();
}

std::string envelope_csv(const std::vector<EnvelopeRow>& rows) {
    CsvWriter w(kEnvelopeColumns);
    for (const auto& r : rows) {
        w.field(r.t).field(r.gamma).field(r.integral_gamma).field(r.envelope).field(r.rho_hat);
        w.end_row();
    }
    return w.text();
}

std::string stability_csv(const std::vector<StabilityRow>& rows) {
    CsvWriter w(kStabilityColumns);
    for (const auto& r : rows) {
        w.field(r.gap).field(r.initial_w2_sq).field(r.sup_rho_hat).field(r.sup_w2_sq).field(r.gamma_total);
        w.field(r.certificate);
        w.end_row();
    }
    return w.text();
}

namespace {

double parse_real(const std::string& s, const std::filesystem::path& path, std::size_t record) {
    double x = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    if (first < last && *first == '+') ++first;
    const auto r = std::from_chars(first, last, x);
    if (r.ec != std::errc() || r.ptr != last || !std::isfinite(x)) {
        throw IoError(path.string() + ": record " + std::to_string(record) + ": not a finite number: '" + s + "'");
    }
    return x;
}

}  // namespace

std::vector<Velocity> read_snapshot(const std::filesystem::path& path) {
    const CsvTable table = parse_csv(read_file(path));
    if (table.header != kSnapshotColumns) {
        throw IoError(path.string() + ": expected header vx,vy,vz");
    }
    std::vector<Velocity> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        out.emplace_back(parse_real(row[0], path, r + 2), parse_real(row[1], path, r + 2),
                         parse_real(row[2], path, r + 2));
    }
    if (out.empty()) throw IoError(path.string() + ": no velocities");
    return out;
}

}  // namespace lcl::io
