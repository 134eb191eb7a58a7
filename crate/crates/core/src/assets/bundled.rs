//! Default repositories compiled into the library.

macro_rules! bundle {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_bytes!(concat!("../../testdata/repo/", $path)))),*]
    };
}

static FILES: &[(&str, &[u8])] = bundle![
    "robots/manifest.json",
    "robots/baxter.urdf",
    "robots/tiago_dual.urdf",
    "robots/panda.urdf",
    "robots/ur5.urdf",
    "robots/two_link.urdf",
    "robots/two_link.sdf",
    "objects/manifest.json",
    "objects/screwdriver.fbx",
    "objects/hammer.fbx",
    "objects/water_bottle.fbx",
    "objects/drawer_cabinet.urdf",
];

pub(super) fn get(path: &str) -> Option<&'static [u8]> {
    FILES.iter().find(|(p, _)| *p == path).map(|(_, bytes)| *bytes)
}
