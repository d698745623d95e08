use std::collections::BTreeSet;

use crate::forge::{directory_of, subsystem_of};
use crate::miner::CommitRecord;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SizeDiffusion {
    pub la: f64,
    pub ld: f64,
    pub lt: f64,
    pub ns: f64,
    pub nd: f64,
    pub nf: f64,
    pub ent: f64,
}

/// Normalized Shannon entropy of changed-line mass over files. Zero with at
/// most one file or no changed lines.
pub fn entropy(changed: &[u64]) -> f64 {
    let n = changed.len();
    let total: u64 = changed.iter().sum();
    if n <= 1 || total == 0 {
        return 0.0;
    }
    let h: f64 = changed
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum();
    (h / (n as f64).log2()).clamp(0.0, 1.0)
}

pub fn size_diffusion(commit: &CommitRecord) -> SizeDiffusion {
    let files = &commit.changes;
    let subsystems: BTreeSet<String> = files.iter().map(|f| subsystem_of(&f.path)).collect();
    let dirs: BTreeSet<String> = files.iter().map(|f| directory_of(&f.path)).collect();
    let changed: Vec<u64> = files.iter().map(|f| f.churn()).collect();
    SizeDiffusion {
        la: commit.lines_added() as f64,
        ld: commit.lines_deleted() as f64,
        lt: files.iter().map(|f| f.size_before).sum::<u64>() as f64,
        ns: subsystems.len() as f64,
        nd: dirs.len() as f64,
        nf: files.len() as f64,
        ent: entropy(&changed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::FileChange;

    fn change(path: &str, added: u64, deleted: u64, size_before: u64) -> FileChange {
        FileChange {
            path: path.into(),
            lines_added: added,
            lines_deleted: deleted,
            size_before,
            before_text: None,
            after_text: None,
            language: "unknown".into(),
        }
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&[5, 5]), 1.0);
        assert_eq!(entropy(&[7]), 0.0);
        assert_eq!(entropy(&[0, 0]), 0.0);
        // -(0.75 log2 0.75 + 0.25 log2 0.25) / log2 2
        let expected = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((entropy(&[3, 1]) - expected).abs() < 1e-12);
        assert!((entropy(&[3, 1]) - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn sums_and_diffusion() {
        let commit = CommitRecord {
            hash: "h".into(),
            parent_hashes: vec![],
            author_id: "a".into(),
            author_time: 0,
            message: String::new(),
            changes: vec![
                change("README", 1, 0, 10),
                change("src/a/x.mini", 2, 1, 20),
                change("src/a/y.mini", 3, 0, 0),
                change("src/b/z.mini", 0, 4, 4),
                change("test/t.mini", 5, 5, 30),
            ],
            is_release: false,
        };
        let s = size_diffusion(&commit);
        assert_eq!((s.la, s.ld, s.lt, s.nf), (11.0, 10.0, 64.0, 5.0));
        // subsystems: /, src, test; directories: /, src/a, src/b, test
        assert_eq!((s.ns, s.nd), (3.0, 4.0));
        assert!(s.ent > 0.0 && s.ent <= 1.0);
    }
}
