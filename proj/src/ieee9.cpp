#include "gridcascade/grid.hpp"

namespace gridcascade {

namespace {

constexpr std::string_view kIeee9 = R"toml(# IEEE 9-bus test system (MATPOWER case9 bus, generator and branch data), per-unit on 100 MVA.
# Line charging is not modelled. Branch ids are ordered so that the capacity vector
# c = (1, 1.8, 1, 0.6, 0.5, 1, 1, 1, 1) holds the undisturbed flows of every model.

[case]
name = "ieee9"
base_mva = 100.0

[[bus]]
id = 1
kind = "slack"
p = 0.723
q = 0.0
v_set = 1.0

[[bus]]
id = 2
kind = "generator"
p = 1.63
q = 0.0
v_set = 1.0

[[bus]]
id = 3
kind = "generator"
p = 0.85
q = 0.0
v_set = 1.0

[[bus]]
id = 4
kind = "load"
p = 0.0
q = 0.0

[[bus]]
id = 5
kind = "load"
p = -0.9
q = -0.3

[[bus]]
id = 6
kind = "load"
p = 0.0
q = 0.0

[[bus]]
id = 7
kind = "load"
p = -1.0
q = -0.35

[[bus]]
id = 8
kind = "load"
p = 0.0
q = 0.0

[[bus]]
id = 9
kind = "load"
p = -1.25
q = -0.5

[[branch]]
id = 1
from = 1
to = 4
r = 0.0
x = 0.0576
capacity = 1.0

[[branch]]
id = 2
from = 8
to = 2
r = 0.0
x = 0.0625
capacity = 1.8

[[branch]]
id = 3
from = 5
to = 6
r = 0.039
x = 0.17
capacity = 1.0

[[branch]]
id = 4
from = 4
to = 5
r = 0.017
x = 0.092
capacity = 0.6

[[branch]]
id = 5
from = 9
to = 4
r = 0.01
x = 0.085
capacity = 0.5

[[branch]]
id = 6
from = 3
to = 6
r = 0.0
x = 0.0586
capacity = 1.0

[[branch]]
id = 7
from = 6
to = 7
r = 0.0119
x = 0.1008
capacity = 1.0

[[branch]]
id = 8
from = 7
to = 8
r = 0.0085
x = 0.072
capacity = 1.0

[[branch]]
id = 9
from = 8
to = 9
r = 0.032
x = 0.161
capacity = 1.0
)toml";

}  // namespace

std::string_view ieee9_document() { return kIeee9; }

const Grid& ieee9() {
  static const Grid grid = load_case(kIeee9);
  return grid;
}

}  // namespace gridcascade
