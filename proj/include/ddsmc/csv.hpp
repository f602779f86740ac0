#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ddsmc::csv {

/// Block file: a sequence of named sections,
///   matrix,<name>,<rows>,<cols>   followed by <rows> comma-separated lines
///   scalar,<name>,<value>
///   text,<name>,<value>
/// Doubles are written with "%.17g" so round trips are bit exact.
/// Lines starting with '#' are comments and are skipped on read.
struct BlockFile {
    std::map<std::string, Eigen::MatrixXd> matrices;
    std::map<std::string, double> scalars;
    std::map<std::string, std::string> texts;
    std::vector<std::string> order;  // section names in write order

    void put(const std::string& name, const Eigen::MatrixXd& m);
    void put(const std::string& name, double v);
    void put(const std::string& name, const std::string& v);

    const Eigen::MatrixXd& matrix(const std::string& name) const;
    double scalar(const std::string& name) const;
    const std::string& text(const std::string& name) const;
    bool has(const std::string& name) const;
};

std::string format_double(double v);

void write_file(const BlockFile& bf, const std::string& path,
                const std::vector<std::string>& comment_lines = {});
std::string write_string(const BlockFile& bf, const std::vector<std::string>& comment_lines = {});
BlockFile read_file(const std::string& path);
BlockFile read_string(const std::string& content);

}  // namespace ddsmc::csv
