//! The two-state chain: actions move deterministically to the named state,
//! all rewards are zero, `γ = 0.9`, and `Φ = (1, 2)⊤`.

use crate::features::FeatureMap;
use crate::mdp::{MdpSpec, Policy};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const GAMMA: f64 = 0.9;

/// The chain with its feature map and the two policies of interest.
#[derive(Debug, Clone)]
pub struct TwoStateBundle {
    pub mdp: MdpSpec,
    pub features: FeatureMap,
    /// Left/right with probability ½ each.
    pub equiprobable: Policy,
    /// Always right.
    pub always_right: Policy,
}

pub fn two_state_mdp() -> TwoStateBundle {
    // Action `a` leads to state `a` from anywhere.
    let transition = (0..2)
        .map(|_| (0..2).map(|a| (0..2).map(|s| if s == a { 1.0 } else { 0.0 }).collect()).collect())
        .collect();
    let reward = vec![vec![vec![0.0; 2]; 2]; 2];
    TwoStateBundle {
        mdp: MdpSpec::new(transition, reward, GAMMA).expect("static chain is valid"),
        features: FeatureMap::matrix(vec![vec![1.0], vec![2.0]]).expect("static features are valid"),
        equiprobable: Policy::uniform(2, 2),
        always_right: Policy::deterministic(&[RIGHT, RIGHT], 2).expect("static policy is valid"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{stationary_distribution, state_transition_matrix};

    #[test]
    fn dynamics() {
        let b = two_state_mdp();
        assert_eq!(b.mdp.prob(LEFT, RIGHT, RIGHT), 1.0);
        assert_eq!(b.mdp.reward(LEFT, RIGHT, RIGHT), 0.0);
        assert_eq!(b.mdp.prob(RIGHT, LEFT, LEFT), 1.0);
        assert_eq!(b.mdp.gamma(), 0.9);
    }

    #[test]
    fn stationary_distributions() {
        let b = two_state_mdp();
        let d1 = stationary_distribution(&state_transition_matrix(&b.mdp, &b.equiprobable).unwrap()).unwrap();
        let d2 = stationary_distribution(&state_transition_matrix(&b.mdp, &b.always_right).unwrap()).unwrap();
        assert!((d1[0] - 0.5).abs() < 1e-12 && (d1[1] - 0.5).abs() < 1e-12);
        assert!(d2[0].abs() < 1e-12 && (d2[1] - 1.0).abs() < 1e-12);
    }
}
