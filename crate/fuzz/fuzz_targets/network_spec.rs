#![no_main]

use libfuzzer_sys::fuzz_target;
use traffic_core::geometry::{ArcSpec, NetworkPoint, RoadNetwork};

fuzz_target!(|data: &[u8]| {
    let Ok(arcs) = serde_json::from_slice::<Vec<ArcSpec>>(data) else { return };
    let Ok(net) = RoadNetwork::build(&arcs) else { return };
    let ends: Vec<NetworkPoint> = (0..net.arcs().len())
        .flat_map(|a| [NetworkPoint::on_arc(a, 0.0), NetworkPoint::on_arc(a, net.arc(a).length)])
        .collect();
    for x in &ends {
        for y in &ends {
            match (net.distance(x, y), net.distance(y, x)) {
                (Ok(d), Ok(e)) => assert!(d >= 0.0 && d == e),
                (Err(_), Err(_)) => {}
                _ => panic!("asymmetric reachability"),
            }
        }
    }
    for path in net.enumerate_paths() {
        for k in 0..=8 {
            let s = path.length * k as f64 / 8.0;
            let p = path.point_at(&net, s).expect("coordinate on path");
            let back = path.coordinate(&p).expect("point on path");
            assert!((back - s).abs() <= 1e-9 * (1.0 + path.length));
        }
    }
});
