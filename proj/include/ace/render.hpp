#ifndef ACE_RENDER_HPP
#define ACE_RENDER_HPP

#include "ace/evaluation.hpp"
#include "ace/types.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ace {

/// One column per example: the model patch on top, its source-image crop
/// below, each resized to `tile` x `tile`, on a white background.
RgbImage make_montage(std::span<const RgbImage> patches, std::span<const RgbImage> crops, int tile = 100,
                      int gap = 4);

/// Line chart of accuracy against k, one polyline per named series.
std::string curve_svg(const std::string& title, const std::string& x_label,
                      const std::map<std::string, std::vector<CurvePoint>>& series);

struct IndexEntry {
  int concept_id = 0;
  int size = 0;
  std::string rule;
  std::optional<double> score;
  std::optional<double> p_value;
  bool passed = false;
  std::string montage_path;  // relative to the SVG
};

/// Overview page: one row per concept with a TCAV bar and its montage.
std::string index_svg(const std::string& title, std::span<const IndexEntry> entries,
                      const std::vector<std::string>& links);

/// Escapes &, <, >, " and ' for XML text and attributes.
std::string xml_escape(const std::string& s);

}  // namespace ace

#endif  // ACE_RENDER_HPP
