#include "mmfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mmfusion/errors.hpp"

namespace mmfusion {

namespace {

void check_index(std::size_t i, std::size_t n, const char* what) {
    if (i >= n) {
        throw ArgumentError(std::string(what) + " label " + std::to_string(i) +
                            " out of range for " + std::to_string(n) + " classes");
    }
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::uint64_t parse_count(const std::string& s) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        throw FormatError("bad count field '" + s + "' in confusion CSV");
    }
    if (pos != s.size() || s[0] == '-') {
        throw FormatError("bad count field '" + s + "' in confusion CSV");
    }
    return v;
}

}  // namespace

void ConfusionMatrix::add(std::size_t actual, std::size_t predicted) {
    check_index(actual, n_, "actual");
    check_index(predicted, n_, "predicted");
    ++counts_[actual * n_ + predicted];
}

std::uint64_t ConfusionMatrix::at(std::size_t actual, std::size_t predicted) const {
    check_index(actual, n_, "actual");
    check_index(predicted, n_, "predicted");
    return counts_[actual * n_ + predicted];
}

std::uint64_t& ConfusionMatrix::cell(std::size_t actual, std::size_t predicted) {
    check_index(actual, n_, "actual");
    check_index(predicted, n_, "predicted");
    return counts_[actual * n_ + predicted];
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (std::uint64_t c : counts_) s += c;
    return s;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += counts_[i * n_ + i];
    return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
    check_index(i, n_, "row");
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += counts_[i * n_ + j];
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
    check_index(j, n_, "column");
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += counts_[i * n_ + j];
    return s;
}

ConfusionMatrix confusion(const std::vector<int>& actual,
                          const std::vector<int>& predicted, std::size_t n_classes) {
    if (actual.size() != predicted.size()) {
        throw ArgumentError("label sequences differ in length: " +
                            std::to_string(actual.size()) + " vs " +
                            std::to_string(predicted.size()));
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t k = 0; k < actual.size(); ++k) {
        if (actual[k] < 0 || predicted[k] < 0) {
            throw ArgumentError("negative label at position " + std::to_string(k));
        }
        cm.add(static_cast<std::size_t>(actual[k]), static_cast<std::size_t>(predicted[k]));
    }
    return cm;
}

ConfusionMatrix confusion(const std::vector<int>& actual,
                          const std::vector<int>& predicted) {
    int max_label = -1;
    for (int v : actual) max_label = std::max(max_label, v);
    for (int v : predicted) max_label = std::max(max_label, v);
    return confusion(actual, predicted, static_cast<std::size_t>(max_label + 1));
}

double accuracy(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw ArgumentError("accuracy of an empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

WeightedPRF weighted_prf(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw ArgumentError("metrics of an empty confusion matrix");
    const std::size_t n = cm.n_classes();
    double wp = 0.0;
    double wr = 0.0;
    double wf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diag = static_cast<double>(cm.at(i, i));
        const double rs = static_cast<double>(cm.row_sum(i));
        const double cs = static_cast<double>(cm.col_sum(i));
        const double p = cs > 0.0 ? diag / cs : 0.0;
        const double r = rs > 0.0 ? diag / rs : 0.0;
        const double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        wp += rs * p;
        // rs * (diag / rs) cancels to diag; summing the cancelled form keeps
        // weighted recall equal to accuracy bit for bit.
        wr += rs > 0.0 ? diag : 0.0;
        wf += rs * f1;
    }
    const double t = static_cast<double>(total);
    return {wp / t, wr / t, wf / t};
}

EvalReport evaluate(const ConfusionMatrix& cm) {
    EvalReport rep;
    rep.confusion = cm;
    rep.accuracy = accuracy(cm);
    const WeightedPRF prf = weighted_prf(cm);
    rep.precision_weighted = prf.precision;
    rep.recall_weighted = prf.recall;
    rep.f1_weighted = prf.f1;
    return rep;
}

EvalReport evaluate(const std::vector<int>& actual, const std::vector<int>& predicted,
                    std::size_t n_classes) {
    return evaluate(confusion(actual, predicted, n_classes));
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "actual\\predicted";
    for (std::size_t j = 0; j < cm.n_classes(); ++j) out << ',' << j;
    out << '\n';
    for (std::size_t i = 0; i < cm.n_classes(); ++i) {
        out << i;
        for (std::size_t j = 0; j < cm.n_classes(); ++j) out << ',' << cm.at(i, j);
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

ConfusionMatrix read_confusion_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty confusion CSV '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_fields(line);
    if (header.empty() || header[0] != "actual\\predicted") {
        throw FormatError("unexpected header in confusion CSV '" + path + "'");
    }
    const std::size_t n = header.size() - 1;
    for (std::size_t j = 0; j < n; ++j) {
        if (header[j + 1] != std::to_string(j)) {
            throw FormatError("unexpected column label '" + header[j + 1] + "' in '" +
                              path + "'");
        }
    }
    ConfusionMatrix cm(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) {
            throw FormatError("confusion CSV '" + path + "' truncated at row " +
                              std::to_string(i));
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != n + 1 || fields[0] != std::to_string(i)) {
            throw FormatError("bad row " + std::to_string(i) + " in confusion CSV '" +
                              path + "'");
        }
        for (std::size_t j = 0; j < n; ++j) cm.cell(i, j) = parse_count(fields[j + 1]);
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line != "\r") {
            throw FormatError("trailing content in confusion CSV '" + path + "'");
        }
    }
    return cm;
}

void write_heatmap_pgm(const ConfusionMatrix& cm, const std::string& path,
                       unsigned zoom) {
    if (zoom == 0) throw ArgumentError("heatmap zoom must be at least 1");
    if (cm.n_classes() == 0) throw ArgumentError("heatmap of an empty confusion matrix");
    const std::size_t n = cm.n_classes();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "P5\n" << n * zoom << ' ' << n * zoom << "\n255\n";
    std::vector<unsigned char> scanline(n * zoom);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t rs = cm.row_sum(i);
        for (std::size_t j = 0; j < n; ++j) {
            // Rows are scaled by their own sum; an empty row stays white.
            unsigned char v = 255;
            if (rs > 0) {
                const double frac = static_cast<double>(cm.at(i, j)) /
                                    static_cast<double>(rs);
                v = static_cast<unsigned char>(255 - static_cast<int>(255.0 * frac + 0.5));
            }
            for (unsigned z = 0; z < zoom; ++z) scanline[j * zoom + z] = v;
        }
        for (unsigned z = 0; z < zoom; ++z) {
            out.write(reinterpret_cast<const char*>(scanline.data()),
                      static_cast<std::streamsize>(scanline.size()));
        }
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

void export_heatmap(const ConfusionMatrix& cm, const std::string& csv_path,
                    const std::string& pgm_path, unsigned zoom) {
    write_confusion_csv(cm, csv_path);
    write_heatmap_pgm(cm, pgm_path, zoom);
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "model,accuracy,precision_weighted,recall_weighted,f1_weighted,epochs_ran\n";
    out << std::fixed << std::setprecision(6);
    for (const MetricsRow& r : rows) {
        out << r.model << ',' << r.accuracy << ',' << r.precision_weighted << ','
            << r.recall_weighted << ',' << r.f1_weighted << ',' << r.epochs_ran << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mmfusion
