//! End-to-end orchestration for one map: classification, basin, preimage
//! tree, X approximation, verdict, domain pair, capture report.

use num_complex::Complex64;

use crate::classify::{auto_basin, classify, principal_critical_point, BasinRaster, MapClass, MapLabel};
use crate::cubic::CubicMap;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::renorm::{build_ql_domains, capture_detect, verdict, CaptureReport, QlDomainPair, RenormStatus, RenormVerdict};
use crate::xset::{build_tree, continuation_map, x_approx, PreimageTree, XApprox};

/// Everything the pipeline produced for one map.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub map: CubicMap,
    /// The map the backward-orbit machinery actually ran on.
    pub pipeline_map: CubicMap,
    /// True when `pipeline_map` is a perturbed-multiplier surrogate; outputs
    /// carry the flag.
    pub continued: bool,
    pub class: MapClass,
    pub omega1: Complex64,
    pub basin: BasinRaster,
    pub tree: PreimageTree,
    pub x: XApprox,
    pub verdict: RenormVerdict,
    pub domains: Option<QlDomainPair>,
    /// Why the domain construction failed, when it did.
    pub domain_failure: Option<String>,
    pub capture: Option<CaptureReport>,
}

impl Analysis {
    /// The status the tool reports: an ImmediatelyRenormalizable verdict
    /// whose domain construction failed is downgraded to Undetermined.
    pub fn reported_status(&self) -> RenormStatus {
        if self.verdict.status == RenormStatus::ImmediatelyRenormalizable
            && self.domains.is_none()
        {
            RenormStatus::Undetermined
        } else {
            self.verdict.status
        }
    }
}

/// Run the whole pipeline on one map.
///
/// Fails unless the map classifies as potentially renormalizable. Degenerate
/// multipliers (λ = 0, |λ| = 1) are continued to a nearby in-component
/// surrogate before the tree is built; the result is flagged.
pub fn analyze(map: &CubicMap, params: &Params) -> Result<Analysis> {
    let class = classify(map, params)?;
    if class.label != MapLabel::PotentiallyRenormalizable {
        return Err(Error::NotPotentiallyRenormalizable(class.label));
    }

    let (pipeline_map, continued) = continuation_map(map);
    let basin = auto_basin(&pipeline_map, params)?;
    let omega1 = principal_critical_point(&pipeline_map, Some(&basin), params)?;

    let mut tree = build_tree(&pipeline_map, params.depth, &basin, params)?;
    tree.source_map = *map;
    tree.continued = continued;

    let x = x_approx(&tree, params.cutoff, params.x_resolution)?;
    let verdict = verdict(&pipeline_map, &x, params);

    let (domains, domain_failure) =
        if verdict.status == RenormStatus::ImmediatelyRenormalizable {
            match build_ql_domains(&pipeline_map, &x, params) {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, None)
        };

    let capture = if verdict.status == RenormStatus::ImmediatelyRenormalizable {
        Some(capture_detect(
            &pipeline_map,
            omega1,
            &x,
            params.orbit_budget,
        )?)
    } else {
        None
    };

    Ok(Analysis {
        map: *map,
        pipeline_map,
        continued,
        class,
        omega1,
        basin,
        tree,
        x,
        verdict,
        domains,
        domain_failure,
        capture,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xset::Connectivity;

    #[test]
    fn reference_map_full_pipeline() {
        let params = Params::default();
        let map = CubicMap::from_re(0.5, 10.0);
        let a = analyze(&map, &params).unwrap();
        assert!(!a.continued);
        assert_eq!(a.verdict.evidence.connectivity, Connectivity::Connected);
        assert_eq!(a.verdict.status, RenormStatus::ImmediatelyRenormalizable);
        assert!(a.domains.is_some(), "domain construction: {:?}", a.domain_failure);
        let report = a.capture.unwrap();
        if report.captured {
            assert!(report.entry_time.unwrap() >= 2);
        }
    }

    #[test]
    fn hyperbolic_proxy_map_is_rejected() {
        let map = CubicMap::from_re(0.0, 0.0);
        assert!(matches!(
            analyze(&map, &Params::desk_small()),
            Err(Error::NotPotentiallyRenormalizable(MapLabel::Phd3Proxy))
        ));
    }
}
