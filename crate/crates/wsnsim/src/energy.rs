//! State-timeline energy accounting: per-node, per-component power
//! integrated over state residency.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kernel::NodeId;
use crate::phy::RadioState;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Radio,
    Cpu,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Radio => "radio",
            Component::Cpu => "cpu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpuState {
    Idle,
    Active,
}

impl CpuState {
    pub const ALL: [CpuState; 2] = [CpuState::Idle, CpuState::Active];

    pub fn name(self) -> &'static str {
        match self {
            CpuState::Idle => "idle",
            CpuState::Active => "active",
        }
    }
}

/// A component together with one of its states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentState {
    Radio(RadioState),
    Cpu(CpuState),
}

impl ComponentState {
    pub fn component(self) -> Component {
        match self {
            ComponentState::Radio(_) => Component::Radio,
            ComponentState::Cpu(_) => Component::Cpu,
        }
    }

    pub fn state_name(self) -> &'static str {
        match self {
            ComponentState::Radio(s) => s.name(),
            ComponentState::Cpu(s) => s.name(),
        }
    }
}

/// Power draw per (component, state), in milliwatts. Every reachable state
/// has an entry by construction; configuration loading validates the values.
#[derive(Debug, Clone, Copy)]
pub struct PowerTable {
    /// Indexed in [`RadioState::ALL`] order: sleep, idle, rx, tx.
    pub radio_mw: [f64; 4],
    /// Indexed in [`CpuState::ALL`] order: idle, active.
    pub cpu_mw: [f64; 2],
}

impl PowerTable {
    /// Explicitly-labeled placeholder. Real scenarios must configure the
    /// `[power]` section; this exists for unit tests and exploratory runs
    /// only and is not hardware truth.
    pub fn placeholder() -> Self {
        PowerTable {
            radio_mw: [0.001, 5.0, 45.0, 60.0],
            cpu_mw: [0.01, 3.0],
        }
    }

    pub fn power_mw(&self, state: ComponentState) -> f64 {
        match state {
            ComponentState::Radio(s) => {
                self.radio_mw[RadioState::ALL.iter().position(|x| *x == s).unwrap()]
            }
            ComponentState::Cpu(s) => {
                self.cpu_mw[CpuState::ALL.iter().position(|x| *x == s).unwrap()]
            }
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        for (i, &p) in self.radio_mw.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(EnergyError::NegativePower {
                    component: Component::Radio,
                    state: RadioState::ALL[i].name(),
                    power_mw: p,
                });
            }
        }
        for (i, &p) in self.cpu_mw.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(EnergyError::NegativePower {
                    component: Component::Cpu,
                    state: CpuState::ALL[i].name(),
                    power_mw: p,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("power for {component:?}/{state} is negative ({power_mw} mW)")]
    NegativePower {
        component: Component,
        state: &'static str,
        power_mw: f64,
    },
    #[error("energy ledger knows no node {0}")]
    UnknownNode(NodeId),
    #[error("state change for node {node} at {at} precedes last change at {last}")]
    TimeRegression {
        node: NodeId,
        at: SimTime,
        last: SimTime,
    },
}

/// One entry of the state-change trace; replayable by an external oracle.
#[derive(Debug, Clone, Copy)]
pub struct StateChange {
    pub node: NodeId,
    pub state: ComponentState,
    pub at: SimTime,
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone)]
struct ComponentTimeline<const N: usize> {
    current: usize,
    last_change: SimTime,
    energy_j: [KahanSum; N],
}

impl<const N: usize> ComponentTimeline<N> {
    fn new(initial: usize, at: SimTime) -> Self {
        ComponentTimeline {
            current: initial,
            last_change: at,
            energy_j: [KahanSum::default(); N],
        }
    }

    fn advance(&mut self, power_mw_by_state: &[f64; N], new: usize, at: SimTime) {
        let dt_ns = (at - self.last_change).as_ns();
        self.energy_j[self.current].add(power_mw_by_state[self.current] * dt_ns as f64 * 1e-12);
        self.current = new;
        self.last_change = at;
    }

    /// Energy per state with the open interval virtually closed at `at`.
    fn settled_at(&self, power_mw_by_state: &[f64; N], at: SimTime) -> [f64; N] {
        let mut out = [0.0; N];
        for (i, k) in self.energy_j.iter().enumerate() {
            out[i] = k.value();
        }
        let dt_ns = at.saturating_sub(self.last_change).as_ns();
        let mut tail = self.energy_j[self.current];
        tail.add(power_mw_by_state[self.current] * dt_ns as f64 * 1e-12);
        out[self.current] = tail.value();
        out
    }
}

#[derive(Debug, Clone)]
struct NodeTimeline {
    radio: ComponentTimeline<4>,
    cpu: ComponentTimeline<2>,
}

/// One row of the energy report.
#[derive(Debug, Clone, Copy)]
pub struct EnergyRow {
    pub node: NodeId,
    pub component: Component,
    pub state: &'static str,
    pub energy_j: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
    /// Per-node total: the plain sum of that node's rows, in row order,
    /// so the total always equals the breakdown sum exactly.
    pub node_totals: Vec<(NodeId, f64)>,
}

/// Accumulates energy over each node's component state timeline.
pub struct EnergyLedger {
    power: PowerTable,
    nodes: BTreeMap<NodeId, NodeTimeline>,
    trace: Vec<StateChange>,
}

impl EnergyLedger {
    pub fn new(power: PowerTable) -> Self {
        EnergyLedger {
            power,
            nodes: BTreeMap::new(),
            trace: Vec::new(),
        }
    }

    /// Registers a node with its initial component states. The initial
    /// states open the trace so a replay starts from the same picture.
    pub fn register_node(
        &mut self,
        node: NodeId,
        radio: RadioState,
        cpu: CpuState,
        at: SimTime,
    ) {
        let radio_idx = RadioState::ALL.iter().position(|s| *s == radio).unwrap();
        let cpu_idx = CpuState::ALL.iter().position(|s| *s == cpu).unwrap();
        self.nodes.insert(
            node,
            NodeTimeline {
                radio: ComponentTimeline::new(radio_idx, at),
                cpu: ComponentTimeline::new(cpu_idx, at),
            },
        );
        self.trace.push(StateChange {
            node,
            state: ComponentState::Radio(radio),
            at,
        });
        self.trace.push(StateChange {
            node,
            state: ComponentState::Cpu(cpu),
            at,
        });
    }

    /// Closes the open interval of the component at `at` and switches state.
    pub fn notify_state_change(
        &mut self,
        node: NodeId,
        state: ComponentState,
        at: SimTime,
    ) -> Result<(), EnergyError> {
        let timeline = self
            .nodes
            .get_mut(&node)
            .ok_or(EnergyError::UnknownNode(node))?;
        match state {
            ComponentState::Radio(s) => {
                if at < timeline.radio.last_change {
                    return Err(EnergyError::TimeRegression {
                        node,
                        at,
                        last: timeline.radio.last_change,
                    });
                }
                let idx = RadioState::ALL.iter().position(|x| *x == s).unwrap();
                timeline.radio.advance(&self.power.radio_mw, idx, at);
            }
            ComponentState::Cpu(s) => {
                if at < timeline.cpu.last_change {
                    return Err(EnergyError::TimeRegression {
                        node,
                        at,
                        last: timeline.cpu.last_change,
                    });
                }
                let idx = CpuState::ALL.iter().position(|x| *x == s).unwrap();
                timeline.cpu.advance(&self.power.cpu_mw, idx, at);
            }
        }
        self.trace.push(StateChange { node, state, at });
        Ok(())
    }

    /// Total node energy with open intervals virtually closed at `at`.
    pub fn total_joules(&self, node: NodeId, at: SimTime) -> Option<f64> {
        let t = self.nodes.get(&node)?;
        let mut total = 0.0;
        for e in t.radio.settled_at(&self.power.radio_mw, at) {
            total += e;
        }
        for e in t.cpu.settled_at(&self.power.cpu_mw, at) {
            total += e;
        }
        Some(total)
    }

    /// Per-node, per-component, per-state breakdown at `horizon`, rows in
    /// (node id, component, state) order. Non-destructive.
    pub fn report(&self, horizon: SimTime) -> EnergyReport {
        let mut report = EnergyReport::default();
        for (&node, t) in &self.nodes {
            let radio = t.radio.settled_at(&self.power.radio_mw, horizon);
            let cpu = t.cpu.settled_at(&self.power.cpu_mw, horizon);
            let mut total = 0.0;
            for (i, s) in RadioState::ALL.iter().enumerate() {
                report.rows.push(EnergyRow {
                    node,
                    component: Component::Radio,
                    state: s.name(),
                    energy_j: radio[i],
                });
                total += radio[i];
            }
            for (i, s) in CpuState::ALL.iter().enumerate() {
                report.rows.push(EnergyRow {
                    node,
                    component: Component::Cpu,
                    state: s.name(),
                    energy_j: cpu[i],
                });
                total += cpu[i];
            }
            report.node_totals.push((node, total));
        }
        report
    }

    pub fn state_trace(&self) -> &[StateChange] {
        &self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> PowerTable {
        PowerTable {
            radio_mw: [0.0004, 5.0, 45.0, 60.0],
            cpu_mw: [0.01, 3.0],
        }
    }

    #[test]
    fn tx_for_50_ms_at_60_mw_is_3_mj() {
        let mut ledger = EnergyLedger::new(table());
        ledger.register_node(NodeId(1), RadioState::Tx, CpuState::Idle, SimTime::ZERO);
        ledger
            .notify_state_change(
                NodeId(1),
                ComponentState::Radio(RadioState::Idle),
                SimTime::from_ms(50),
            )
            .unwrap();
        let report = ledger.report(SimTime::from_ms(50));
        let tx = report
            .rows
            .iter()
            .find(|r| r.component == Component::Radio && r.state == "tx")
            .unwrap();
        assert_relative_eq!(tx.energy_j, 3.0e-3, max_relative = 1e-12);
    }

    #[test]
    fn zero_interval_adds_nothing() {
        let mut ledger = EnergyLedger::new(table());
        ledger.register_node(NodeId(1), RadioState::Rx, CpuState::Idle, SimTime::ZERO);
        ledger
            .notify_state_change(NodeId(1), ComponentState::Radio(RadioState::Idle), SimTime::ZERO)
            .unwrap();
        assert_eq!(ledger.total_joules(NodeId(1), SimTime::ZERO).unwrap(), 0.0);
    }

    #[test]
    fn two_segment_sum_matches_hand_check() {
        // Rx 100 ms at 45 mW, then Sleep 900 ms at 0.0004 mW:
        // 4.5 mJ + 0.36 µJ.
        let mut ledger = EnergyLedger::new(table());
        ledger.register_node(NodeId(1), RadioState::Rx, CpuState::Idle, SimTime::ZERO);
        ledger
            .notify_state_change(
                NodeId(1),
                ComponentState::Radio(RadioState::Idle),
                SimTime::from_ms(100),
            )
            .unwrap();
        ledger
            .notify_state_change(
                NodeId(1),
                ComponentState::Radio(RadioState::Sleep),
                SimTime::from_ms(100),
            )
            .unwrap();
        let report = ledger.report(SimTime::from_secs(1));
        let by_state = |name: &str| {
            report
                .rows
                .iter()
                .find(|r| r.node == NodeId(1) && r.component == Component::Radio && r.state == name)
                .unwrap()
                .energy_j
        };
        assert_relative_eq!(by_state("rx"), 4.5e-3, max_relative = 1e-12);
        assert_relative_eq!(by_state("sleep"), 3.6e-7, max_relative = 1e-12);
    }

    #[test]
    fn whole_run_in_sleep() {
        let mut ledger = EnergyLedger::new(table());
        ledger.register_node(NodeId(1), RadioState::Sleep, CpuState::Idle, SimTime::ZERO);
        let report = ledger.report(SimTime::from_secs(10));
        let sleep = report
            .rows
            .iter()
            .find(|r| r.component == Component::Radio && r.state == "sleep")
            .unwrap();
        // 10 s at 0.0004 mW = 4 µJ.
        assert_relative_eq!(sleep.energy_j, 4.0e-6, max_relative = 1e-12);
    }

    #[test]
    fn totals_equal_breakdown_sum_bitwise() {
        let mut ledger = EnergyLedger::new(table());
        ledger.register_node(NodeId(1), RadioState::Idle, CpuState::Idle, SimTime::ZERO);
        let times = [3u64, 7, 20, 21, 400, 1000];
        let states = [
            RadioState::Rx,
            RadioState::Idle,
            RadioState::Tx,
            RadioState::Idle,
            RadioState::Sleep,
            RadioState::Idle,
        ];
        for (t, s) in times.iter().zip(states) {
            ledger
                .notify_state_change(NodeId(1), ComponentState::Radio(s), SimTime::from_ms(*t))
                .unwrap();
        }
        let report = ledger.report(SimTime::from_secs(2));
        let sum: f64 = report
            .rows
            .iter()
            .filter(|r| r.node == NodeId(1))
            .map(|r| r.energy_j)
            .sum();
        assert_eq!(sum.to_bits(), report.node_totals[0].1.to_bits());
    }

    #[test]
    fn time_regression_is_fatal() {
        let mut ledger = EnergyLedger::new(table());
        ledger.register_node(NodeId(1), RadioState::Idle, CpuState::Idle, SimTime::from_ms(5));
        let err = ledger
            .notify_state_change(NodeId(1), ComponentState::Radio(RadioState::Rx), SimTime::from_ms(4))
            .unwrap_err();
        assert!(matches!(err, EnergyError::TimeRegression { .. }));
    }

    #[test]
    fn unknown_node_is_fatal() {
        let mut ledger = EnergyLedger::new(table());
        let err = ledger
            .notify_state_change(NodeId(9), ComponentState::Cpu(CpuState::Active), SimTime::ZERO)
            .unwrap_err();
        assert_eq!(err, EnergyError::UnknownNode(NodeId(9)));
    }

    #[test]
    fn negative_power_rejected() {
        let mut t = table();
        t.cpu_mw[1] = -1.0;
        assert!(matches!(t.validate(), Err(EnergyError::NegativePower { .. })));
        assert!(table().validate().is_ok());
        assert!(PowerTable::placeholder().validate().is_ok());
    }

    #[test]
    fn components_are_independent_under_permutation() {
        // Interleaving radio and cpu notifications in any order leaves each
        // component's totals unchanged.
        let radio_changes = [
            (RadioState::Rx, 10u64),
            (RadioState::Idle, 30),
            (RadioState::Tx, 40),
            (RadioState::Idle, 90),
        ];
        let cpu_changes = [(CpuState::Active, 15u64), (CpuState::Idle, 22)];

        let run = |radio_first: bool| {
            let mut ledger = EnergyLedger::new(table());
            ledger.register_node(NodeId(1), RadioState::Idle, CpuState::Idle, SimTime::ZERO);
            let mut events: Vec<(u64, ComponentState)> = radio_changes
                .iter()
                .map(|(s, t)| (*t, ComponentState::Radio(*s)))
                .chain(cpu_changes.iter().map(|(s, t)| (*t, ComponentState::Cpu(*s))))
                .collect();
            events.sort_by_key(|(t, s)| {
                (
                    *t,
                    match (radio_first, s.component()) {
                        (true, Component::Radio) | (false, Component::Cpu) => 0,
                        _ => 1,
                    },
                )
            });
            for (t, s) in events {
                ledger
                    .notify_state_change(NodeId(1), s, SimTime::from_ms(t))
                    .unwrap();
            }
            ledger.report(SimTime::from_ms(100))
        };

        let a = run(true);
        let b = run(false);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.energy_j.to_bits(), rb.energy_j.to_bits());
        }
    }

    #[test]
    fn trace_replay_oracle_matches_ledger() {
        // Independent replay of the state-change trace: naive Σ P·Δt per
        // (component, state), compared at 1e-9 relative.
        let mut ledger = EnergyLedger::new(table());
        ledger.register_node(NodeId(1), RadioState::Idle, CpuState::Idle, SimTime::ZERO);
        let script = [
            (ComponentState::Radio(RadioState::Rx), 5u64),
            (ComponentState::Cpu(CpuState::Active), 7),
            (ComponentState::Cpu(CpuState::Idle), 9),
            (ComponentState::Radio(RadioState::Idle), 55),
            (ComponentState::Radio(RadioState::Tx), 61),
            (ComponentState::Radio(RadioState::Idle), 111),
            (ComponentState::Radio(RadioState::Sleep), 120),
        ];
        for (s, t) in script {
            ledger
                .notify_state_change(NodeId(1), s, SimTime::from_ms(t))
                .unwrap();
        }
        let horizon = SimTime::from_secs(1);
        let report = ledger.report(horizon);

        let table = table();
        let mut oracle: std::collections::HashMap<(&str, &str), f64> = Default::default();
        let mut last: std::collections::HashMap<&str, (ComponentState, SimTime)> = Default::default();
        for change in ledger.state_trace() {
            let comp = change.state.component().name();
            if let Some((prev_state, since)) = last.get(comp) {
                let dt = (change.at - *since).as_ns() as f64;
                *oracle.entry((comp, prev_state.state_name())).or_default() +=
                    table.power_mw(*prev_state) * dt * 1e-12;
            }
            last.insert(comp, (change.state, change.at));
        }
        for (state, since) in last.values() {
            let dt = (horizon - *since).as_ns() as f64;
            *oracle
                .entry((state.component().name(), state.state_name()))
                .or_default() += table.power_mw(*state) * dt * 1e-12;
        }

        for row in &report.rows {
            let expect = oracle
                .get(&(row.component.name(), row.state))
                .copied()
                .unwrap_or(0.0);
            if expect == 0.0 {
                assert_eq!(row.energy_j, 0.0, "{:?}/{}", row.component, row.state);
            } else {
                assert_relative_eq!(row.energy_j, expect, max_relative = 1e-9);
            }
        }
    }
}
