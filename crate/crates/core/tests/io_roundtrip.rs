use nalgebra::{Unit, Vector3};
use proptest::prelude::*;

use weldgroove::io::{format_index_list, parse_index_list, parse_pcd, parse_ply, write_pcd, write_ply};
use weldgroove::{Point3, PointCloud};

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, -1e-3..1e-3f64, Just(0.0), Just(-0.0)]
}

fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(((coord(), coord(), coord()), (-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64)), 1..60).prop_flat_map(
        |rows| {
            (Just(rows), any::<bool>(), (coord(), coord(), coord())).prop_map(|(rows, with_normals, vp)| {
                let points = rows.iter().map(|((x, y, z), _)| Point3::new(*x, *y, *z)).collect();
                let mut cloud = PointCloud::with_viewpoint(points, Point3::new(vp.0, vp.1, vp.2)).unwrap();
                if with_normals {
                    let normals = rows.iter().map(|(_, (a, b, c))| Unit::new_normalize(Vector3::new(*a, *b, *c))).collect();
                    cloud = cloud.set_normals(normals).unwrap();
                }
                cloud
            })
        },
    )
}

proptest! {
    #[test]
    fn pcd_round_trip_is_exact(cloud in cloud_strategy()) {
        let text = write_pcd(&cloud);
        let back = parse_pcd(&text).unwrap();
        prop_assert_eq!(&back, &cloud);
        prop_assert_eq!(write_pcd(&back), text);
    }

    #[test]
    fn ply_round_trip_keeps_points_and_normals(cloud in cloud_strategy()) {
        let back = parse_ply(&write_ply(&cloud)).unwrap();
        prop_assert_eq!(back.points(), cloud.points());
        prop_assert_eq!(back.normals(), cloud.normals());
    }

    #[test]
    fn index_list_round_trip(mut v in prop::collection::vec(0usize..1_000_000, 0..200)) {
        v.sort_unstable();
        v.dedup();
        prop_assert_eq!(parse_index_list(&format_index_list(&v)).unwrap(), v);
    }
}
