#pragma once

#include "tileqr/dag.hpp"
#include "tileqr/driver.hpp"
#include "tileqr/kernels.hpp"
#include "tileqr/matrix.hpp"
#include "tileqr/matrix_io.hpp"
#include "tileqr/random.hpp"
#include "tileqr/reference.hpp"
#include "tileqr/scheduler.hpp"
#include "tileqr/tile_storage.hpp"
#include "tileqr/trace.hpp"
