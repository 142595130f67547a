#pragma once

#include "flip/admin/fair_use.hpp"
#include "flip/admin/keys.hpp"
#include "flip/consensus/channel_assign.hpp"
#include "flip/consensus/proposal.hpp"
#include "flip/core/event_log.hpp"
#include "flip/core/ids.hpp"
#include "flip/core/rng.hpp"
#include "flip/engine/simulation.hpp"
#include "flip/experiments/metrics.hpp"
#include "flip/experiments/scenario.hpp"
#include "flip/intercluster/graph.hpp"
#include "flip/intercluster/routing.hpp"
#include "flip/membership/profile.hpp"
#include "flip/membership/views.hpp"
#include "flip/pubsub/records.hpp"
#include "flip/radio/duty_cycle.hpp"
#include "flip/radio/occupation.hpp"
#include "flip/radio/path_loss.hpp"
#include "flip/radio/phy.hpp"
#include "flip/radio/receiver.hpp"
