#pragma once

#include "mesres/network.hpp"

namespace mesres::testing {

// Slack bus feeding one demand over a single line.
inline MultiEnergyNetwork two_bus_net(double p_w = 400e3, double q_var = 80e3) {
  MultiEnergyNetwork net;
  net.name = "two-bus";
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  el.buses = {{0, 0.9, 1.1, 0.0, 0.0}, {1, 0.9, 1.1, 0.0, 0.0}};
  el.lines = {{0, 0, 1, 2.0, 4.0, 0.0, 1.0, 0.0, 2e6, 1.0}};
  el.demands = {{0, 1, p_w, q_var}};
  net.finalize();
  return net;
}

// Four-bus feeder with a generator, used by the electric oracles.
inline MultiEnergyNetwork feeder_net() {
  MultiEnergyNetwork net;
  net.name = "feeder";
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  for (int i = 0; i < 4; ++i) el.buses.push_back({i, 0.9, 1.1, 0.0, 0.0});
  el.buses[2].shunt_b_s = 2e-6;
  el.lines = {{0, 0, 1, 1.2, 2.2, 1.5e-6, 1.0, 0.0, 3e6, 1.0},
              {1, 1, 2, 1.0, 1.8, 1.0e-6, 1.0, 0.0, 2e6, 0.8},
              {2, 2, 3, 0.8, 1.5, 0.0, 0.98, 0.02, 1e6, 0.6},
              {3, 0, 3, 2.0, 3.5, 0.0, 1.0, 0.0, 1e6, 1.5}};
  el.generators = {{0, 3, 150e3, 30e3, 500e3}};
  el.demands = {{0, 1, 350e3, 70e3}, {1, 2, 250e3, 50e3}, {2, 3, 180e3, 36e3}};
  net.finalize();
  return net;
}

// Small coupled network touching every carrier and coupling kind.
// Meshed 12-bus distribution feeder: trunk 0-1-2-3-4, laterals at 2, 3 and 1,
// loop closers 6-8 and 4-11, demand on every non-slack bus.
inline MultiEnergyNetwork mv12_base() {
  MultiEnergyNetwork net;
  net.name = "mv-12";
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  for (int i = 0; i < 12; ++i) el.buses.push_back({i, 0.9, 1.1, 0.0, 0.0});
  el.lines = {{0, 0, 1, 0.4, 0.9, 0.0, 1.0, 0.0, 8e6, 0.8},
              {1, 1, 2, 0.4, 0.9, 0.0, 1.0, 0.0, 6e6, 1.0},
              {2, 2, 3, 0.5, 1.0, 0.0, 1.0, 0.0, 5e6, 1.2},
              {3, 3, 4, 0.5, 1.0, 0.0, 1.0, 0.0, 4e6, 0.9},
              {4, 2, 5, 0.6, 1.1, 0.0, 1.0, 0.0, 3e6, 0.7},
              {5, 5, 6, 0.6, 1.1, 0.0, 1.0, 0.0, 3e6, 0.6},
              {6, 3, 7, 0.6, 1.1, 0.0, 1.0, 0.0, 3e6, 0.8},
              {7, 7, 8, 0.6, 1.1, 0.0, 1.0, 0.0, 3e6, 0.5},
              {8, 1, 9, 0.6, 1.1, 0.0, 1.0, 0.0, 3e6, 1.1},
              {9, 9, 10, 0.6, 1.1, 0.0, 1.0, 0.0, 3e6, 0.6},
              {10, 10, 11, 0.6, 1.1, 0.0, 1.0, 0.0, 3e6, 0.7},
              {11, 6, 8, 0.8, 1.4, 0.0, 1.0, 0.0, 2e6, 0.9},
              {12, 4, 11, 0.8, 1.4, 0.0, 1.0, 0.0, 2e6, 1.3}};
  el.generators = {{0, 6, 200e3, 40e3, 800e3}};
  el.demands = {{0, 1, 260e3, 52e3}, {1, 2, 180e3, 36e3},  {2, 3, 240e3, 48e3},
                {3, 4, 150e3, 30e3}, {4, 5, 210e3, 42e3},  {5, 6, 120e3, 24e3},
                {6, 7, 190e3, 38e3}, {7, 8, 160e3, 32e3},  {8, 9, 230e3, 46e3},
                {9, 10, 140e3, 28e3}, {10, 11, 170e3, 34e3}};
  net.finalize();
  return net;
}

inline MultiEnergyNetwork toy_mes() {
  MultiEnergyNetwork net;
  net.name = "toy";
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  for (int i = 0; i < 4; ++i) el.buses.push_back({i, 0.9, 1.1, 0.0, 0.0});
  el.lines = {{0, 0, 1, 0.6, 1.1, 0.0, 1.0, 0.0, 2e6, 1.0},
              {1, 1, 2, 0.5, 0.9, 0.0, 1.0, 0.0, 2e6, 0.8},
              {2, 2, 3, 0.5, 0.9, 0.0, 1.0, 0.0, 1.5e6, 0.8}};
  el.generators = {{0, 3, 100e3, 20e3, 400e3}};
  el.demands = {{0, 1, 300e3, 60e3}, {1, 2, 200e3, 40e3}, {2, 3, 150e3, 30e3}};

  auto& gas = net.gas;
  gas.slack_junction = 0;
  gas.slack_pressure_pa = 40e5;
  for (int i = 0; i < 3; ++i) gas.junctions.push_back({i, 32e5, 48e5});
  gas.pipes = {{0, 0, 1, 1000.0, 0.3, 0.3, 1e-4}, {1, 1, 2, 800.0, 0.3, 0.3, 1e-4}};
  gas.sources = {{0, 0, 0.0, 1.0}};
  gas.demands = {{0, 1, 0.006}, {1, 2, 0.004}};

  auto& heat = net.heat;
  heat.slack_junction = 0;
  for (int i = 0; i < 3; ++i) heat.junctions.push_back({i, 328.15, 368.15});
  heat.pipes = {{0, 0, 1, 500.0, 0.2, 0.2, 1e-4, 0.035},
                {1, 1, 2, 400.0, 0.15, 0.15, 1e-4, 0.035}};
  heat.sources = {{0, 0, 5.0}};
  heat.demands = {{0, 1, 200e3}, {1, 2, 100e3}};

  net.coupling_points = {
      {0, CouplingKind::Chp, 0.30, 0.55, 0.0, 2, 1, 0, 1, 0.01, 0.003},
      {1, CouplingKind::PowerToHeat, 0.95, 0.0, 0.0, 1, -1, 1, 2, 100e3, 30e3},
      {2, CouplingKind::PowerToGas, 0.0, 0.0, 0.60, 3, 2, -1, -1, 50e3, 10e3},
  };
  net.finalize();
  return net;
}

}  // namespace mesres::testing
