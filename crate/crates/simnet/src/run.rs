//! Scenario execution: one logical-time epoch over the tree (two for
//! replay scenarios), with every message actually encoded on each link
//! and decoded at its receiver.

use crate::attack::{inject_attack, AttackContext, AttackError};
use crate::deploy::{build_materials, DeployError, Materials};
use crate::report::{DetectionVerdict, LinkMetric, RunReport};
use crate::scenario::{Attack, ReadingSource, Scenario, ScenarioError};
use crate::topology::{Topology, TopologyError};
use num_bigint::BigUint;
use secagg_core::numeric::{rand_range, Rng};
use secagg_core::protocol::{
    aggregate, base_receive, leaf_emit, AggMessage, EpochResult, Role,
};
use secagg_core::sig::epoch_setup;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("honest epoch failed: {0}")]
    HonestRunFailed(String),
}

/// What one epoch produced before the base verdict is interpreted.
struct EpochRun {
    outcome: Result<EpochResult, String>,
    links: Vec<LinkMetric>,
    /// The encoded message that crossed the root link (pre-attack), for
    /// replay capture.
    root_message: Option<AggMessage>,
}

/// Runs a validated scenario to completion.
pub fn run_scenario(scenario: &Scenario) -> Result<RunReport, SimError> {
    let started = Instant::now();
    scenario.validate()?;
    let topology = Topology::build(scenario.nodes, scenario.fanout, scenario.seed)?;
    let mut rng = Rng::from_seed(scenario.seed);
    let materials = build_materials(scenario, &topology, &mut rng)?;
    let readings = draw_readings(scenario, &topology, &mut rng);
    let expected_sum: u128 = readings.values().map(|&r| r as u128).sum();

    // Replay needs a captured message from an earlier epoch; run one
    // honest epoch first and keep what crossed the root link.
    let captured = if scenario.attack == Attack::ReplayEpoch {
        let prior = run_epoch(
            &materials,
            &topology,
            &readings,
            1,
            Attack::None,
            None,
            &mut rng,
        )?;
        prior.root_message
    } else {
        None
    };
    let epoch_id = if captured.is_some() { 2 } else { 1 };

    let epoch = run_epoch(
        &materials,
        &topology,
        &readings,
        epoch_id,
        scenario.attack,
        captured.as_ref(),
        &mut rng,
    )?;

    let (sum, verified, error) = match &epoch.outcome {
        Ok(result) => (Some(result.sum.to_string()), result.verified, None),
        Err(e) => (None, false, Some(e.clone())),
    };
    if scenario.attack == Attack::None {
        if let Some(e) = &error {
            return Err(SimError::HonestRunFailed(e.clone()));
        }
    }
    let detection = match scenario.attack {
        Attack::None => DetectionVerdict::NotApplicable,
        _ if !verified => DetectionVerdict::Detected,
        _ => DetectionVerdict::Missed,
    };
    let outcome_matches_expectation = match scenario.attack {
        Attack::None => verified && sum.as_deref() == Some(expected_sum.to_string().as_str()),
        Attack::TamperCt | Attack::TamperSig | Attack::ReplayEpoch => {
            detection == DetectionVerdict::Detected
        }
        Attack::ForgeSubtree => {
            if scenario.strict {
                detection == DetectionVerdict::Detected
            } else {
                detection == DetectionVerdict::Missed
            }
        }
    };

    let total_upward_bytes = epoch.links.iter().map(|l| l.bytes).sum();
    Ok(RunReport {
        scenario: scenario.clone(),
        epoch_id,
        sum,
        expected_sum: expected_sum.to_string(),
        verified,
        detection,
        error,
        outcome_matches_expectation,
        node_count: topology.node_count(),
        leaf_count: topology.leaf_count(),
        depth: topology.depth(),
        links: epoch.links,
        total_upward_bytes,
        root_packets_aggregated: 1,
        root_packets_unaggregated: topology.leaf_count() as u64,
        duration: started.elapsed(),
    })
}

/// One reading per non-base node, drawn or assigned in ascending id order.
fn draw_readings(
    scenario: &Scenario,
    topology: &Topology,
    rng: &mut Rng,
) -> BTreeMap<u16, u64> {
    let mut readings = BTreeMap::new();
    match &scenario.readings {
        ReadingSource::Fixed { values } => {
            for (idx, id) in (1..topology.node_count() as u16).enumerate() {
                readings.insert(id, values[idx]);
            }
        }
        ReadingSource::Uniform { max_reading } => {
            let hi = BigUint::from(max_reading + 1);
            for id in 1..topology.node_count() as u16 {
                let draw = rand_range(rng, &BigUint::ZERO, &hi).expect("nonempty range");
                let value: u64 = draw.to_string().parse().expect("fits u64");
                readings.insert(id, value);
            }
        }
    }
    readings
}

/// Plays one epoch: nonce broadcast (cost-free, trusted), upward passes
/// with per-link encode/decode, attack injection, and the base verdict.
fn run_epoch(
    materials: &Materials,
    topology: &Topology,
    readings: &BTreeMap<u16, u64>,
    epoch_id: u64,
    attack: Attack,
    captured: Option<&AggMessage>,
    rng: &mut Rng,
) -> Result<EpochRun, SimError> {
    let dep = &materials.deployment;
    let nonce = epoch_setup(dep.curve(), epoch_id, rng);
    // deterministic attack points: man-in-the-middle attacks hit the root
    // link; the forging aggregator is the lowest-id one, rewriting its
    // lowest-id child
    let forge_at: Option<(u16, u16)> = if attack == Attack::ForgeSubtree {
        let aggregator = (1..topology.node_count() as u16)
            .find(|&id| topology.role(id) == Role::Aggregator)
            .expect("validated: forge-subtree needs an aggregator");
        let child = topology.children(aggregator)[0];
        Some((aggregator, child))
    } else {
        None
    };

    let mut inbox: BTreeMap<u16, Vec<u8>> = BTreeMap::new(); // child id → bytes sent
    let mut links: Vec<LinkMetric> = Vec::new();
    let mut outcome: Result<EpochResult, String> = Err("epoch produced no message".to_string());
    let mut root_message = None;

    'epoch: {
        for id in topology.upward_order() {
            let node = &materials.nodes[&id];
            // collect and decode this node's children messages
            let mut children_msgs = Vec::new();
            for &child in topology.children(id) {
                let bytes = inbox.remove(&child).expect("children processed first");
                match AggMessage::decode(&bytes, dep) {
                    Ok(mut msg) => {
                        if forge_at == Some((id, child)) {
                            let ctx = AttackContext {
                                dep,
                                nonce: &nonce,
                                max_reading: dep.max_reading(),
                                prior_message: None,
                            };
                            msg = inject_attack(Attack::ForgeSubtree, &msg, &ctx, rng)?;
                        }
                        children_msgs.push(msg);
                    }
                    Err(e) => {
                        outcome = Err(format!("decode at node {id}: {e}"));
                        break 'epoch;
                    }
                }
            }

            let produced = if children_msgs.is_empty() {
                leaf_emit(node, readings[&id], &nonce, dep, rng)
            } else {
                aggregate(
                    node,
                    Some(readings[&id]),
                    &children_msgs,
                    &nonce,
                    dep,
                    rng,
                )
            };
            let mut msg = match produced {
                Ok(msg) => msg,
                Err(e) => {
                    outcome = Err(format!("node {id}: {e}"));
                    break 'epoch;
                }
            };

            let parent = topology.parent(id).expect("non-base node");
            if parent == 0 {
                root_message = Some(msg.clone());
                // the root link is where in-transit tampering strikes
                if matches!(
                    attack,
                    Attack::TamperCt | Attack::TamperSig | Attack::ReplayEpoch
                ) {
                    let ctx = AttackContext {
                        dep,
                        nonce: &nonce,
                        max_reading: dep.max_reading(),
                        prior_message: captured,
                    };
                    msg = inject_attack(attack, &msg, &ctx, rng)?;
                }
            }
            let bytes = msg.encode(dep);
            links.push(LinkMetric {
                from: id,
                to: parent,
                bytes: bytes.len() as u64,
            });
            inbox.insert(id, bytes);
        }

        // base station: decode the single root-link message and finish
        let root_child = topology.children(0)[0];
        let bytes = inbox.remove(&root_child).expect("root child processed");
        outcome = match AggMessage::decode(&bytes, dep) {
            Ok(msg) => base_receive(dep, &materials.ou.private, &nonce, &msg)
                .map_err(|e| format!("base station: {e}")),
            Err(e) => Err(format!("decode at base: {e}")),
        };
    }

    links.sort_by_key(|l| l.from);
    Ok(EpochRun {
        outcome,
        links,
        root_message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ParamSet;

    fn chain_scenario(attack: Attack, strict: bool, seed: u64) -> Scenario {
        Scenario {
            params: ParamSet::Standard,
            nodes: 4,
            fanout: 1,
            readings: ReadingSource::Fixed {
                values: vec![10, 20, 30],
            },
            attack,
            strict,
            seed,
        }
    }

    #[test]
    fn honest_chain_reports_the_oracle_sum() {
        let report = run_scenario(&chain_scenario(Attack::None, false, 5)).unwrap();
        assert_eq!(report.sum.as_deref(), Some("60"));
        assert_eq!(report.expected_sum, "60");
        assert!(report.verified);
        assert_eq!(report.detection, DetectionVerdict::NotApplicable);
        assert!(report.outcome_matches_expectation);
        assert_eq!(report.links.len(), 3);
        assert!(report.links.iter().all(|l| l.bytes > 0));
        assert_eq!(report.root_packets_aggregated, 1);
        assert_eq!(report.root_packets_unaggregated, 1);
    }

    #[test]
    fn tampered_ciphertext_is_detected_with_shifted_sum() {
        let report = run_scenario(&chain_scenario(Attack::TamperCt, false, 6)).unwrap();
        assert_eq!(report.sum.as_deref(), Some("61"));
        assert!(!report.verified);
        assert_eq!(report.detection, DetectionVerdict::Detected);
        assert!(report.outcome_matches_expectation);
    }

    #[test]
    fn tampered_signature_is_detected() {
        let report = run_scenario(&chain_scenario(Attack::TamperSig, false, 7)).unwrap();
        assert_eq!(report.sum.as_deref(), Some("60"));
        assert!(!report.verified);
        assert_eq!(report.detection, DetectionVerdict::Detected);
        assert!(report.outcome_matches_expectation);
    }

    #[test]
    fn replay_is_rejected_by_epoch_id() {
        let report = run_scenario(&chain_scenario(Attack::ReplayEpoch, false, 8)).unwrap();
        assert_eq!(report.epoch_id, 2);
        assert_eq!(report.sum, None);
        assert_eq!(report.detection, DetectionVerdict::Detected);
        assert!(report.error.as_deref().unwrap_or("").contains("epoch"));
        assert!(report.outcome_matches_expectation);
    }

    #[test]
    fn forge_splits_on_verification_mode() {
        let missed = run_scenario(&chain_scenario(Attack::ForgeSubtree, false, 9)).unwrap();
        assert_eq!(missed.detection, DetectionVerdict::Missed);
        assert!(missed.verified);
        assert!(missed.outcome_matches_expectation);

        let caught = run_scenario(&chain_scenario(Attack::ForgeSubtree, true, 9)).unwrap();
        assert_eq!(caught.detection, DetectionVerdict::Detected);
        assert!(!caught.verified);
        assert!(caught.outcome_matches_expectation);
    }

    #[test]
    fn toy_parameters_run_small_honest_scenarios() {
        let sc = Scenario {
            params: ParamSet::Toy,
            nodes: 4,
            fanout: 1,
            readings: ReadingSource::Fixed {
                values: vec![1, 2, 2],
            },
            attack: Attack::None,
            strict: false,
            seed: 10,
        };
        let report = run_scenario(&sc).unwrap();
        assert_eq!(report.sum.as_deref(), Some("5"));
        assert!(report.verified);
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let sc = Scenario {
            params: ParamSet::Standard,
            nodes: 10,
            fanout: 3,
            readings: ReadingSource::Uniform { max_reading: 75 },
            attack: Attack::TamperCt,
            strict: true,
            seed: 1234,
        };
        let a = run_scenario(&sc).unwrap().to_canonical_json();
        let b = run_scenario(&sc).unwrap().to_canonical_json();
        assert_eq!(a, b);
    }
}
