#include "ddsmc/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddsmc::csv {

namespace {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("csv parse error at line " + std::to_string(line) + ": " + what) {}
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, int line) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "bad number '" + s + "'");
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void BlockFile::put(const std::string& name, const Eigen::MatrixXd& m) {
    matrices[name] = m;
    order.push_back("matrix:" + name);
}

void BlockFile::put(const std::string& name, double v) {
    scalars[name] = v;
    order.push_back("scalar:" + name);
}

void BlockFile::put(const std::string& name, const std::string& v) {
    texts[name] = v;
    order.push_back("text:" + name);
}

const Eigen::MatrixXd& BlockFile::matrix(const std::string& name) const {
    auto it = matrices.find(name);
    if (it == matrices.end()) throw std::runtime_error("missing matrix section: " + name);
    return it->second;
}

double BlockFile::scalar(const std::string& name) const {
    auto it = scalars.find(name);
    if (it == scalars.end()) throw std::runtime_error("missing scalar section: " + name);
    return it->second;
}

const std::string& BlockFile::text(const std::string& name) const {
    auto it = texts.find(name);
    if (it == texts.end()) throw std::runtime_error("missing text section: " + name);
    return it->second;
}

bool BlockFile::has(const std::string& name) const {
    return matrices.count(name) || scalars.count(name) || texts.count(name);
}

std::string write_string(const BlockFile& bf, const std::vector<std::string>& comment_lines) {
    std::ostringstream os;
    for (const auto& c : comment_lines) os << "# " << c << "\n";
    for (const auto& entry : bf.order) {
        auto colon = entry.find(':');
        const std::string kind = entry.substr(0, colon);
        const std::string name = entry.substr(colon + 1);
        if (kind == "matrix") {
            const auto& m = bf.matrices.at(name);
            os << "matrix," << name << "," << m.rows() << "," << m.cols() << "\n";
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                    os << format_double(m(r, c)) << (c + 1 < m.cols() ? "," : "");
                os << "\n";
            }
        } else if (kind == "scalar") {
            os << "scalar," << name << "," << format_double(bf.scalars.at(name)) << "\n";
        } else {
            os << "text," << name << "," << bf.texts.at(name) << "\n";
        }
    }
    return os.str();
}

void write_file(const BlockFile& bf, const std::string& path,
                const std::vector<std::string>& comment_lines) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << write_string(bf, comment_lines);
}

BlockFile read_string(const std::string& content) {
    BlockFile bf;
    std::istringstream is(content);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split(line);
        if (fields[0] == "matrix") {
            if (fields.size() != 4) throw ParseError(lineno, "matrix header needs name,rows,cols");
            const std::string name = fields[1];
            long rows = 0, cols = 0;
            try {
                rows = std::stol(fields[2]);
                cols = std::stol(fields[3]);
            } catch (const std::exception&) {
                throw ParseError(lineno, "bad matrix dimensions");
            }
            if (rows < 0 || cols < 0) throw ParseError(lineno, "negative matrix dimensions");
            Eigen::MatrixXd m(rows, cols);
            for (long r = 0; r < rows; ++r) {
                if (!std::getline(is, line)) throw ParseError(lineno, "matrix " + name + " truncated");
                ++lineno;
                auto vals = split(line);
                if (static_cast<long>(vals.size()) != cols)
                    throw ParseError(lineno, "matrix " + name + ": expected " +
                                                 std::to_string(cols) + " columns, got " +
                                                 std::to_string(vals.size()));
                for (long c = 0; c < cols; ++c) m(r, c) = parse_double(vals[c], lineno);
            }
            bf.put(name, m);
        } else if (fields[0] == "scalar") {
            if (fields.size() != 3) throw ParseError(lineno, "scalar needs name,value");
            bf.put(fields[1], parse_double(fields[2], lineno));
        } else if (fields[0] == "text") {
            if (fields.size() < 3) throw ParseError(lineno, "text needs name,value");
            std::string v = fields[2];
            for (size_t i = 3; i < fields.size(); ++i) v += "," + fields[i];
            bf.put(fields[1], v);
        } else {
            throw ParseError(lineno, "unknown section kind '" + fields[0] + "'");
        }
    }
    return bf;
}

BlockFile read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return read_string(ss.str());
}

}  // namespace ddsmc::csv
