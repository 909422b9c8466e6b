#pragma once

#include "colwin/csv.hpp"
#include "colwin/memory_model.hpp"
#include "colwin/memory_tracker.hpp"
#include "colwin/monoid.hpp"
#include "colwin/oracle.hpp"
#include "colwin/position_engine.hpp"
#include "colwin/query.hpp"
#include "colwin/row_store.hpp"
#include "colwin/segment_tree.hpp"
#include "colwin/storage.hpp"
#include "colwin/value.hpp"
#include "colwin/window_eval.hpp"
#include "colwin/window_operator.hpp"
#include "colwin/window_spec.hpp"
