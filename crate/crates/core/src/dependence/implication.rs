use serde::Serialize;

use super::{DependenceReport, TestKind, Verdict};

/// Direct arrows of the implication map between the spatial notions.
pub const ARROWS: &[(TestKind, TestKind)] = &[
    (TestKind::A, TestKind::WA),
    (TestKind::A, TestKind::PSA),
    (TestKind::WA, TestKind::PUOD),
    (TestKind::WA, TestKind::PLOD),
    (TestKind::PSA, TestKind::PSD),
    (TestKind::PSD, TestKind::POD),
    (TestKind::POD, TestKind::PUOD),
    (TestKind::POD, TestKind::PLOD),
];

/// Whether `from ⇒ to` follows from [`ARROWS`] by transitivity.
pub fn implies(from: TestKind, to: TestKind) -> bool {
    if from == to {
        return true;
    }
    let mut seen = vec![from];
    let mut frontier = vec![from];
    while let Some(k) = frontier.pop() {
        for (a, b) in ARROWS {
            if *a == k && !seen.contains(b) {
                if *b == to {
                    return true;
                }
                seen.push(*b);
                frontier.push(*b);
            }
        }
    }
    false
}

/// A verdict pattern that contradicts an arrow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImplicationViolation {
    pub antecedent: TestKind,
    pub consequent: TestKind,
}

/// Flags every pair where the antecedent is consistent and powered (some
/// row strictly positive beyond the margin) while an implied notion is
/// violated.
pub fn implication_consistency(reports: &[DependenceReport]) -> Vec<ImplicationViolation> {
    let mut out = Vec::new();
    for a in reports.iter().filter(|r| r.is_powered()) {
        for c in reports.iter().filter(|r| r.verdict == Verdict::Violated) {
            let v = ImplicationViolation {
                antecedent: a.test,
                consequent: c.test,
            };
            if a.test != c.test && implies(a.test, c.test) && !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}
