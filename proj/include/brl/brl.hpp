#pragma once

#include "brl/error.hpp"
#include "brl/parallel.hpp"
#include "brl/descriptor.hpp"
#include "brl/domain.hpp"
#include "brl/target.hpp"
#include "brl/grassmann.hpp"
#include "brl/map.hpp"
#include "brl/catalog.hpp"
#include "brl/bochner.hpp"
#include "brl/flow.hpp"
#include "brl/rigidity.hpp"
#include "brl/io.hpp"
#include "brl/config.hpp"
#include "brl/cli.hpp"
