#include "relsyn/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace relsyn {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

long read_dim(std::istream& in, const char* what) {
  long v = -1;
  if (!(in >> v) || v < 0) throw IoError(std::string("expected nonnegative ") + what);
  return v;
}

Matrix read_block(std::istream& in, long rows, long cols) {
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw IoError("matrix literal ends early at entry (" + std::to_string(i) + "," +
                      std::to_string(j) + ")");
      }
    }
  }
  return m;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_block(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << fmt(m(i, j));
    out << '\n';
  }
}

template <class T, class F>
T with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace

std::string strip_comments(std::istream& in) {
  std::ostringstream os;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    os << line << '\n';
  }
  return os.str();
}

Matrix parse_matrix(std::istream& in) {
  std::istringstream body(strip_comments(in));
  const long rows = read_dim(body, "row count");
  const long cols = read_dim(body, "column count");
  return read_block(body, rows, cols);
}

Matrix read_matrix(const std::string& path) {
  auto in = open_in(path);
  return with_path<Matrix>(path, [&] { return parse_matrix(in); });
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  write_block(out, m);
}

void write_matrix(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  write_matrix(out, m);
}

FirSystem parse_fir(std::istream& in) {
  std::istringstream body(strip_comments(in));
  const long p = read_dim(body, "row count");
  const long m = read_dim(body, "column count");
  const long horizon = read_dim(body, "horizon");
  std::vector<Matrix> taps;
  for (long k = 0; k <= horizon; ++k) taps.push_back(read_block(body, p, m));
  return FirSystem(std::move(taps));
}

FirSystem read_fir(const std::string& path) {
  auto in = open_in(path);
  return with_path<FirSystem>(path, [&] { return parse_fir(in); });
}

void write_fir(std::ostream& out, const FirSystem& f) {
  out << f.rows() << ' ' << f.cols() << ' ' << f.horizon() << '\n';
  for (int k = 0; k <= f.horizon(); ++k) {
    out << "# tap " << k << '\n';
    write_block(out, f.tap(k));
  }
}

void write_fir(const std::string& path, const FirSystem& f) {
  auto out = open_out(path);
  write_fir(out, f);
}

Plant parse_plant(std::istream& in) {
  std::istringstream body(strip_comments(in));
  std::map<std::string, Matrix> blocks;
  std::string name;
  while (body >> name) {
    if (blocks.count(name)) throw IoError("plant block '" + name + "' appears twice");
    if (name != "A" && name != "B1" && name != "B2" && name != "C1" && name != "D11" &&
        name != "D12" && name != "C2") {
      throw IoError("unknown plant block '" + name + "'");
    }
    const long rows = read_dim(body, "row count");
    const long cols = read_dim(body, "column count");
    blocks[name] = read_block(body, rows, cols);
  }
  for (const char* req : {"A", "B1", "B2", "C1", "D12"}) {
    if (!blocks.count(req)) throw IoError(std::string("plant block '") + req + "' is missing");
  }
  const auto n = blocks["A"].rows();
  Matrix c2 = blocks.count("C2") ? blocks["C2"] : Matrix(Matrix::Identity(n, n));
  Matrix d11 = blocks.count("D11") ? blocks["D11"] : Matrix();
  return Plant(blocks["A"], blocks["B1"], blocks["B2"], blocks["C1"], blocks["D12"], c2, d11);
}

Plant read_plant(const std::string& path) {
  auto in = open_in(path);
  return with_path<Plant>(path, [&] { return parse_plant(in); });
}

}  // namespace relsyn
