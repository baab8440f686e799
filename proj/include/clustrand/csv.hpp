#pragma once

#include "clustrand/sample.hpp"

#include <iosfwd>
#include <string>

namespace clustrand {

// Long-format unit CSV with header: cluster_id, z, y, x_*, c_*, [pi].
// Rows of one cluster need not be contiguous; clusters keep first-appearance order.
ClusteredSample read_sample_csv(std::istream& in);
ClusteredSample read_sample_csv_file(const std::string& path);
void write_sample_csv(std::ostream& out, const ClusteredSample& sample);

// Science CSV: cluster_id, y1, y0, x_*, c_*, [pi].
ScienceTable read_science_csv(std::istream& in);
ScienceTable read_science_csv_file(const std::string& path);

}  // namespace clustrand
