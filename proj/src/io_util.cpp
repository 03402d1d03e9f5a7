#include "drjcc/io_util.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace drjcc {

std::string format_sig12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  // Normalize the two zero signs so identical values render identically.
  if (buf[0] == '-' && buf[1] == '0') {
    double parsed = std::strtod(buf, nullptr);
    if (parsed == 0.0) return "0";
  }
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << content;
}

int thread_cap() {
  const char* env = std::getenv("DRJCC_THREADS");
  if (!env) return 0;
  int v = std::atoi(env);
  return v > 0 ? v : 0;
}

int resolve_threads() {
#ifdef _OPENMP
  int cap = thread_cap();
  int avail = omp_get_max_threads();
  return cap > 0 ? std::min(cap, avail) : avail;
#else
  return 1;
#endif
}

}  // namespace drjcc
