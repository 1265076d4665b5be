// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_CHCOMP_HPP
#define CHCOMP_CHCOMP_HPP

#include "adapt.hpp"
#include "baselines.hpp"
#include "channel.hpp"
#include "constellation.hpp"
#include "design.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "functions.hpp"
#include "gram.hpp"
#include "io.hpp"
#include "sdp.hpp"

#endif
