// pmeas.hpp
// Umbrella header.
#pragma once

#include "pmeas/cli.hpp"
#include "pmeas/entanglement.hpp"
#include "pmeas/hiddenvar.hpp"
#include "pmeas/povm.hpp"
#include "pmeas/protocols.hpp"
#include "pmeas/qcore.hpp"
#include "pmeas/rng.hpp"
#include "pmeas/serialize.hpp"
#include "pmeas/tomography.hpp"
