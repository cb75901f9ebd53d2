#ifndef EDGEHYB_REPORT_HPP
#define EDGEHYB_REPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "edgehyb/evaluation.hpp"

namespace edgehyb {

/// threshold,tp,fp,fn,precision,recall,tp_pred
std::string pr_csv(const std::vector<PRPoint>& curve);

/// id,best_threshold,best_f
std::string per_image_csv(const EvalSummary& s);

/// Method,ODS,OIS,AP in the given order.
std::string summary_csv(const std::vector<EvalSummary>& rows);

/// Fixed-width text table with the same columns, 4 decimals.
std::string summary_table(const std::vector<EvalSummary>& rows);

/// Precision (y) against recall (x) for every method, one polyline each.
std::string pr_svg(const std::vector<EvalSummary>& rows);

/// Writes <method>_pr.csv, <method>_per_image.csv, summary.csv, summary.txt and pr_curves.svg.
void write_evaluation_outputs(const std::filesystem::path& dir, const std::vector<EvalSummary>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Panels of equal size laid out left to right with `gap` white columns.
/// Each panel is height*width bytes.
struct Sheet {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;
};
Sheet compose_sheet(const std::vector<std::vector<std::uint8_t>>& panels, int height, int width, int gap = 4);

}  // namespace edgehyb

#endif  // EDGEHYB_REPORT_HPP
