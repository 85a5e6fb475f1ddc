#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinlv::io {

// CSV writer with fixed %.17g formatting so identical runs produce
// byte-identical files.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }

    void header(std::initializer_list<const char*> cols) {
        bool first = true;
        for (const char* c : cols) {
            if (!first) out_ << ',';
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }

    void row(std::initializer_list<double> vals) {
        bool first = true;
        char buf[32];
        for (double v : vals) {
            if (!first) out_ << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out_ << buf;
            first = false;
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

// Run manifest: plain key=value lines. wall_clock_sec is informational and
// excluded from any reproducibility comparison.
class Manifest {
  public:
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    void set(const std::string& key, double value) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        kv_[key] = buf;
    }
    void set(const std::string& key, std::uint64_t value) { kv_[key] = std::to_string(value); }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
        for (const auto& [k, v] : kv_) out << k << "=" << v << "\n";
    }

  private:
    std::map<std::string, std::string> kv_;
};

}  // namespace kinlv::io
