use std::collections::BTreeSet;

use crate::engine::Injection;
use crate::id::ProcessId;

/// Expected final membership: the requests applied one at a time, in
/// order, with no concurrency. Searches do not change membership.
pub fn reference_membership<'a>(
    initial: &[ProcessId],
    injections: impl IntoIterator<Item = &'a Injection>,
) -> Vec<ProcessId> {
    let mut members: BTreeSet<ProcessId> = initial.iter().copied().collect();
    for inj in injections {
        match *inj {
            Injection::Join { id, .. } => {
                members.insert(id);
            }
            Injection::Leave { id } | Injection::AdversarialExit { id } => {
                members.remove(&id);
            }
            Injection::Search { .. } => {}
        }
    }
    members.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_application() {
        let id = ProcessId::new;
        let init = [id(10), id(20)];
        let join = [Injection::Join {
            id: id(15),
            via: None,
        }];
        assert_eq!(
            reference_membership(&init, &join),
            vec![id(10), id(15), id(20)]
        );
        let more = [join[0], Injection::Leave { id: id(10) }];
        assert_eq!(reference_membership(&init, &more), vec![id(15), id(20)]);
    }
}
