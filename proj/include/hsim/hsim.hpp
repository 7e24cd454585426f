#pragma once

#include "hsim/fock_core.hpp"
#include "hsim/serialization.hpp"
#include "hsim/state_factory.hpp"
#include "hsim/homodyne.hpp"
#include "hsim/criteria.hpp"
#include "hsim/spin_bec.hpp"
#include "hsim/experiment.hpp"
