#pragma once

#include <string>

#include "flexctl/design.hpp"

namespace flexctl {

// Line-oriented CSV records "name,rows,cols,v..." (column-major, %.17g) and
// "name,text". Reading and writing again reproduces the bytes exactly.
std::string write_design(const ControllerDesign& design);
ControllerDesign read_design(const std::string& text);

void save_design(const ControllerDesign& design, const std::string& path);
ControllerDesign load_design(const std::string& path);

}  // namespace flexctl
