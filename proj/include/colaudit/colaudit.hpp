#pragma once

#include "colaudit/attribution.hpp"
#include "colaudit/audit.hpp"
#include "colaudit/caa.hpp"
#include "colaudit/csv.hpp"
#include "colaudit/data.hpp"
#include "colaudit/fragility.hpp"
#include "colaudit/json_io.hpp"
#include "colaudit/model.hpp"
#include "colaudit/rng.hpp"
#include "colaudit/sharp.hpp"
#include "colaudit/synthetic.hpp"
#include "colaudit/theorem.hpp"
#include "colaudit/types.hpp"
