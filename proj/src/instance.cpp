#include "dcqp/instance.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "dcqp/cvxqp.hpp"

namespace dcqp {

const char* to_string(RowKind k) {
  switch (k) {
    case RowKind::inequality: return "inequality";
    case RowKind::normalization: return "normalization";
    case RowKind::equality_upper: return "equality_upper";
    case RowKind::equality_lower: return "equality_lower";
    case RowKind::lower_bound: return "lower_bound";
    case RowKind::upper_bound: return "upper_bound";
    case RowKind::cut: return "cut";
  }
  return "unknown";
}

void QpInstance::validate_and_symmetrize() {
  const Eigen::Index nv = d.size();
  if (Q.rows() != nv || Q.cols() != nv) throw DimensionError("Q must be n x n");
  if (A_ineq.cols() != nv && A_ineq.rows() > 0) throw DimensionError("A has wrong column count");
  if (A_ineq.rows() != b_ineq.size()) throw DimensionError("b length differs from the row count of A");
  if (A_eq.cols() != nv && A_eq.rows() > 0) throw DimensionError("Aeq has wrong column count");
  if (A_eq.rows() != b_eq.size()) throw DimensionError("beq length differs from the row count of Aeq");
  if (lower && lower->size() != nv) throw DimensionError("lb length differs from n");
  if (upper && upper->size() != nv) throw DimensionError("ub length differs from n");
  if (A_ineq.rows() == 0) A_ineq.resize(0, nv);
  if (A_eq.rows() == 0) A_eq.resize(0, nv);
  if (!Q.allFinite() || !d.allFinite() || !A_ineq.allFinite() || !b_ineq.allFinite() || !A_eq.allFinite() ||
      !b_eq.allFinite() || !std::isfinite(offset))
    throw NumericalError("non-finite entry in instance data");
  if (lower && lower->array().isNaN().any()) throw NumericalError("NaN lower bound");
  if (upper && upper->array().isNaN().any()) throw NumericalError("NaN upper bound");
  Q = 0.5 * (Q + Q.transpose()).eval();
}

ReducedInstance ReducedInstance::with_row(const Vec& a, double rhs, RowTag tag) const {
  ReducedInstance out = *this;
  out.A.conservativeResize(A.rows() + 1, Eigen::NoChange);
  out.A.row(A.rows()) = a.transpose();
  out.b.conservativeResize(b.size() + 1);
  out.b(b.size()) = rhs;
  out.provenance.push_back(tag);
  return out;
}

namespace {

struct Token {
  std::string_view text;
  int column;
};

std::vector<Token> split(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

double parse_double(const Token& t, int line, bool allow_inf) {
  double v = 0.0;
  const char* first = t.text.data();
  const char* last = first + t.text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("expected a number, got '" + std::string(t.text) + "'", line, t.column);
  if (std::isnan(v) || (!allow_inf && std::isinf(v)))
    throw ParseError("non-finite value '" + std::string(t.text) + "'", line, t.column);
  return v;
}

long parse_int(const Token& t, int line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (ec != std::errc() || ptr != t.text.data() + t.text.size())
    throw ParseError("expected an integer, got '" + std::string(t.text) + "'", line, t.column);
  return v;
}

Eigen::Index checked_index(const Token& t, int line, Eigen::Index limit, const char* what) {
  const long v = parse_int(t, line);
  if (v < 1 || v > limit)
    throw DimensionError("line " + std::to_string(line) + ", column " + std::to_string(t.column) + ": " + what +
                         " index " + std::to_string(v) + " outside 1.." + std::to_string(limit));
  return static_cast<Eigen::Index>(v - 1);
}

class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank, non-comment line; false at EOF.
  bool next(std::vector<Token>& tokens) {
    while (std::getline(in_, buf_)) {
      ++line_;
      if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();
      tokens = split(buf_);
      if (tokens.empty() || tokens.front().text.front() == '#') continue;
      return true;
    }
    return false;
  }
  int line() const { return line_; }

private:
  std::istream& in_;
  std::string buf_;
  int line_ = 0;
};

}  // namespace

QpInstance parse_canonical(std::istream& in, std::string name) {
  LineReader reader(in);
  std::vector<Token> tok;
  if (!reader.next(tok)) throw ParseError("empty file", 1, 1);
  if (tok.size() != 2 || tok[0].text != "qpinst") throw ParseError("expected header 'qpinst 1'", reader.line(), 1);
  if (parse_int(tok[1], reader.line()) != 1) throw ParseError("unsupported format version", reader.line(), tok[1].column);
  if (!reader.next(tok)) throw ParseError("missing size line", reader.line() + 1, 1);
  if (tok.size() != 4) throw ParseError("size line needs 'n m m_eq has_bounds'", reader.line(), 1);
  const long n = parse_int(tok[0], reader.line());
  const long m = parse_int(tok[1], reader.line());
  const long meq = parse_int(tok[2], reader.line());
  const long has_bounds = parse_int(tok[3], reader.line());
  if (n < 1 || m < 0 || meq < 0 || (has_bounds != 0 && has_bounds != 1))
    throw ParseError("invalid size line", reader.line(), 1);

  QpInstance inst;
  inst.name = std::move(name);
  inst.Q = Mat::Zero(n, n);
  inst.d = Vec::Zero(n);
  inst.A_ineq = Mat::Zero(m, n);
  inst.b_ineq = Vec::Zero(m);
  inst.A_eq = Mat::Zero(meq, n);
  inst.b_eq = Vec::Zero(meq);
  if (has_bounds) {
    inst.lower = Vec::Zero(n);
    inst.upper = Vec::Zero(n);
  }

  enum class Section { none, Q, d, A, b, Aeq, beq, lb, ub, offset };
  Section sec = Section::none;
  while (reader.next(tok)) {
    const int ln = reader.line();
    if (tok.size() == 1 && !std::isdigit(static_cast<unsigned char>(tok[0].text.front())) &&
        tok[0].text.front() != '-' && tok[0].text.front() != '+' && tok[0].text.front() != '.') {
      const auto h = tok[0].text;
      if (h == "Q") sec = Section::Q;
      else if (h == "d") sec = Section::d;
      else if (h == "A") sec = Section::A;
      else if (h == "b") sec = Section::b;
      else if (h == "Aeq") sec = Section::Aeq;
      else if (h == "beq") sec = Section::beq;
      else if (h == "lb") sec = Section::lb;
      else if (h == "ub") sec = Section::ub;
      else if (h == "const") sec = Section::offset;
      else throw ParseError("unknown section '" + std::string(h) + "'", ln, 1);
      if ((sec == Section::lb || sec == Section::ub) && !has_bounds)
        throw ParseError("bound section present but has_bounds = 0", ln, 1);
      continue;
    }
    auto need = [&](std::size_t count) {
      if (tok.size() != count)
        throw ParseError("expected " + std::to_string(count) + " fields, got " + std::to_string(tok.size()), ln,
                         tok.size() > count ? tok[count].column : 1);
    };
    switch (sec) {
      case Section::none: throw ParseError("data before any section header", ln, 1);
      case Section::Q: {
        need(3);
        auto i = checked_index(tok[0], ln, n, "Q row");
        auto j = checked_index(tok[1], ln, n, "Q column");
        const double v = parse_double(tok[2], ln, false);
        inst.Q(i, j) = v;
        inst.Q(j, i) = v;
        break;
      }
      case Section::A:
      case Section::Aeq: {
        need(3);
        Mat& M = sec == Section::A ? inst.A_ineq : inst.A_eq;
        auto i = checked_index(tok[0], ln, M.rows(), sec == Section::A ? "A row" : "Aeq row");
        auto j = checked_index(tok[1], ln, n, "column");
        M(i, j) = parse_double(tok[2], ln, false);
        break;
      }
      case Section::d:
      case Section::b:
      case Section::beq:
      case Section::lb:
      case Section::ub: {
        need(2);
        Vec& v = sec == Section::d ? inst.d
                 : sec == Section::b ? inst.b_ineq
                 : sec == Section::beq ? inst.b_eq
                 : sec == Section::lb ? *inst.lower
                                      : *inst.upper;
        auto i = checked_index(tok[0], ln, v.size(), "vector");
        v(i) = parse_double(tok[1], ln, sec == Section::lb || sec == Section::ub);
        break;
      }
      case Section::offset: {
        need(1);
        inst.offset = parse_double(tok[0], ln, false);
        break;
      }
    }
  }
  inst.validate_and_symmetrize();
  return inst;
}

// Whitespace-separated dump of a  min 1/2 x'Hx + f'x  model:
//   n m meq, H (n x n, row major), f, A (m x n), b, Aeq (meq x n), beq, lb, ub.
QpInstance parse_dense_text(std::istream& in, std::string name) {
  LineReader reader(in);
  std::vector<Token> line_tokens;
  std::size_t pos = 0;
  auto next = [&]() -> std::pair<Token, int> {
    while (pos >= line_tokens.size()) {
      if (!reader.next(line_tokens)) throw ParseError("unexpected end of file", reader.line() + 1, 1);
      pos = 0;
    }
    return {line_tokens[pos++], reader.line()};
  };
  auto next_int = [&]() {
    auto [t, ln] = next();
    return parse_int(t, ln);
  };
  auto next_double = [&](bool allow_inf) {
    auto [t, ln] = next();
    return parse_double(t, ln, allow_inf);
  };
  const long n = next_int();
  const long m = next_int();
  const long meq = next_int();
  if (n < 1 || m < 0 || meq < 0) throw ParseError("invalid sizes", reader.line(), 1);
  Mat H(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) H(i, j) = next_double(false);
  Vec f(n);
  for (long i = 0; i < n; ++i) f(i) = next_double(false);
  QpInstance inst;
  inst.name = std::move(name);
  inst.Q = 0.5 * H;
  inst.d = 0.5 * f;
  inst.A_ineq.resize(m, n);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j) inst.A_ineq(i, j) = next_double(false);
  inst.b_ineq.resize(m);
  for (long i = 0; i < m; ++i) inst.b_ineq(i) = next_double(false);
  inst.A_eq.resize(meq, n);
  for (long i = 0; i < meq; ++i)
    for (long j = 0; j < n; ++j) inst.A_eq(i, j) = next_double(false);
  inst.b_eq.resize(meq);
  for (long i = 0; i < meq; ++i) inst.b_eq(i) = next_double(false);
  Vec lb(n), ub(n);
  for (long i = 0; i < n; ++i) lb(i) = next_double(true);
  for (long i = 0; i < n; ++i) ub(i) = next_double(true);
  inst.lower = lb;
  inst.upper = ub;
  if (pos < line_tokens.size()) throw ParseError("trailing data", reader.line(), line_tokens[pos].column);
  if (reader.next(line_tokens)) throw ParseError("trailing data", reader.line(), line_tokens[0].column);
  inst.validate_and_symmetrize();
  return inst;
}

QpInstance load_instance(const std::filesystem::path& path, InstanceFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const std::string name = path.stem().string();
  return format == InstanceFormat::canonical ? parse_canonical(in, name) : parse_dense_text(in, name);
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_canonical(std::ostream& out, const QpInstance& inst) {
  const Eigen::Index n = inst.n();
  const bool bounds = inst.lower.has_value() || inst.upper.has_value();
  out << "qpinst 1\n" << n << ' ' << inst.m() << ' ' << inst.m_eq() << ' ' << (bounds ? 1 : 0) << '\n';
  out << "Q\n";
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      if (inst.Q(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << num(inst.Q(i, j)) << '\n';
  auto vec = [&](const char* head, const Vec& v) {
    out << head << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v(i) != 0.0) out << i + 1 << ' ' << num(v(i)) << '\n';
  };
  auto mat = [&](const char* head, const Mat& M) {
    out << head << '\n';
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j)
        if (M(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << num(M(i, j)) << '\n';
  };
  vec("d", inst.d);
  mat("A", inst.A_ineq);
  vec("b", inst.b_ineq);
  if (inst.m_eq() > 0) {
    mat("Aeq", inst.A_eq);
    vec("beq", inst.b_eq);
  }
  if (bounds) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    vec("lb", inst.lower.value_or(Vec::Constant(n, -inf)));
    vec("ub", inst.upper.value_or(Vec::Constant(n, inf)));
  }
  if (inst.offset != 0.0) out << "const\n" << num(inst.offset) << '\n';
}

void save_instance(const std::filesystem::path& path, const QpInstance& inst) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    write_canonical(out, inst);
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

double radius_bound(const Mat& A, const Vec& b) {
  const Eigen::Index n = A.cols();
  auto start = feasible_point(A, b);
  if (!start) throw InfeasibleRegionError("feasible region is empty");
  Vec lo(n), hi(n);
  Vec x = *start;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int sign : {+1, -1}) {
      Vec c = Vec::Zero(n);
      c(i) = sign;
      CvxQpOptions opts;
      opts.start = &x;
      auto res = solve_lp(c, A, b, {}, opts);
      if (res.status == QpStatus::unbounded)
        throw UnboundedRegionError("feasible region is unbounded along coordinate " + std::to_string(i + 1));
      if (!res.ok()) throw NumericalError(std::string("bounding-box LP failed: ") + to_string(res.status));
      (sign > 0 ? lo : hi)(i) = res.x(i);
      x = res.x;
    }
  }
  double r = lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm();
  if (lo.minCoeff() >= -1e-12) {
    // Inside the nonnegative orthant the norm is at most the largest coordinate sum.
    auto res = solve_lp(-Vec::Ones(n), A, b, {}, CvxQpOptions{1e-9, 0, &x});
    if (res.ok()) r = std::min(r, res.x.sum());
  }
  return r;
}

ReducedInstance reduce(const QpInstance& inst) {
  const Eigen::Index n = inst.n();
  ReducedInstance red;
  red.name = inst.name;
  red.Q = inst.Q;
  red.d = inst.d;
  red.offset = inst.offset;

  std::vector<std::pair<Vec, double>> rows;
  for (Eigen::Index i = 0; i < inst.m(); ++i) {
    const Vec a = inst.A_ineq.row(i).transpose();
    const bool ones = n > 1 && (a.array() == 1.0).all();
    rows.emplace_back(a, inst.b_ineq(i));
    red.provenance.push_back({ones ? RowKind::normalization : RowKind::inequality, static_cast<int>(i)});
  }
  for (Eigen::Index i = 0; i < inst.m_eq(); ++i) {
    const Vec a = inst.A_eq.row(i).transpose();
    rows.emplace_back(a, inst.b_eq(i));
    red.provenance.push_back({RowKind::equality_upper, static_cast<int>(i)});
    rows.emplace_back(-a, -inst.b_eq(i));
    red.provenance.push_back({RowKind::equality_lower, static_cast<int>(i)});
  }
  if (inst.lower)
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::isfinite((*inst.lower)(i))) {
        rows.emplace_back(-Vec::Unit(n, i), -(*inst.lower)(i));
        red.provenance.push_back({RowKind::lower_bound, static_cast<int>(i)});
      }
  if (inst.upper)
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::isfinite((*inst.upper)(i))) {
        rows.emplace_back(Vec::Unit(n, i), (*inst.upper)(i));
        red.provenance.push_back({RowKind::upper_bound, static_cast<int>(i)});
      }
  if (rows.empty()) throw UnboundedRegionError("no constraints: feasible region is unbounded");
  red.A.resize(static_cast<Eigen::Index>(rows.size()), n);
  red.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    red.A.row(static_cast<Eigen::Index>(k)) = rows[k].first.transpose();
    red.b(static_cast<Eigen::Index>(k)) = rows[k].second;
  }
  red.radius = radius_bound(red.A, red.b);
  return red;
}

namespace {

// Each entry nonzero with probability `density`, drawn from the distribution.
Mat sparse_random(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double density, Distribution dist) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat M = Mat::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      if (unit(rng) < density) M(i, j) = dist == Distribution::uniform ? unit(rng) : gauss(rng);
  return M;
}

}  // namespace

SyntheticDraw draw_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.m_ineq < 1 || spec.m_eq < 0 || !(spec.density > 0.0 && spec.density <= 1.0))
    throw Error("invalid synthetic spec");
  const Eigen::Index n = spec.n;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Mat A = sparse_random(rng, spec.m_ineq, n, spec.density, spec.distribution) -
                sparse_random(rng, spec.m_ineq, n, spec.density, spec.distribution);
  Vec x0(n);
  for (Eigen::Index i = 0; i < n; ++i) x0(i) = 1.0 - unit(rng);
  x0 /= x0.sum();

  SyntheticDraw out;
  QpInstance& inst = out.instance;
  inst.A_ineq.resize(spec.m_ineq + 1, n);
  inst.A_ineq.topRows(spec.m_ineq) = A;
  inst.A_ineq.row(spec.m_ineq).setOnes();
  inst.b_ineq = inst.A_ineq * x0;
  for (Eigen::Index i = 0; i <= spec.m_ineq; ++i) inst.b_ineq(i) += 0.1 * (1.0 - unit(rng));

  const Eigen::Index half = (n + 3) / 4;
  const Mat L = sparse_random(rng, 2 * half, n, spec.density, spec.distribution) -
                sparse_random(rng, 2 * half, n, spec.density, spec.distribution);
  const Mat Lp = L.topRows(half);
  Mat Ln = L.bottomRows(half);
  inst.Q = Lp.transpose() * Lp - Ln.transpose() * Ln;
  // Sparse draws can leave the negative part empty; seed it until Q is indefinite.
  for (Eigen::Index tries = 0; tries < n && lambda_min(inst.Q) >= 0.0; ++tries) {
    Ln(0, static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n))) += 1.0;
    inst.Q = Lp.transpose() * Lp - Ln.transpose() * Ln;
  }
  inst.Q = 0.5 * (inst.Q + inst.Q.transpose()).eval();
  inst.d.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) inst.d(i) = 0.5 * 0.02 * unit(rng);

  if (spec.m_eq > 0) {
    inst.A_eq = sparse_random(rng, spec.m_eq, n, spec.density, spec.distribution) -
                sparse_random(rng, spec.m_eq, n, spec.density, spec.distribution);
    inst.b_eq = inst.A_eq * x0;
  } else {
    inst.A_eq.resize(0, n);
    inst.b_eq.resize(0);
  }
  inst.lower = Vec::Zero(n);
  inst.upper = Vec::Ones(n);
  inst.name = synthetic_name(spec, 0);
  out.interior = x0;
  return out;
}

std::string synthetic_name(const SyntheticSpec& spec, int index) {
  char dens[32];
  std::snprintf(dens, sizeof dens, "%g", 10.0 * spec.density);
  std::ostringstream os;
  os << "qp_" << (spec.distribution == Distribution::uniform ? 'u' : 'n') << '_' << spec.m_eq << '_' << dens << '_'
     << index;
  return os.str();
}

}  // namespace dcqp
