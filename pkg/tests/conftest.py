import numpy as np
import pytest

from tanklab.frames import Pose, rot_x, rot_z, vec3
from tanklab.tracking import TagDetection


def make_detection(t, translation, rotation, tag_id=0):
    return TagDetection(timestamp=float(t), tag_id=tag_id,
                        pose=Pose(np.asarray(translation, float), np.asarray(rotation, float)))


def camera_pose(height=2.4, tilt_x=0.0, cx=2.0, cy=2.0):
    """Overhead camera in a NED world: z axis looks down at the surface."""
    return Pose(vec3(cx, cy, -height), rot_x(tilt_x))


def synthetic_detections(times, traj, cam_pose=None, tag_id=0):
    """Noiseless detections of a surface vehicle.

    ``traj(t)`` returns (x, y, psi) in the NED world; the tag sits at the
    vehicle origin with identity mount.
    """
    cam = cam_pose or camera_pose()
    rc = cam.rotation
    out = []
    for t in times:
        x, y, psi = traj(t)
        p = vec3(x, y, 0.0)
        q = rc.T @ (p - cam.translation)
        r_bc = rc.T @ rot_z(psi)
        out.append(make_detection(t, q, r_bc, tag_id))
    return out


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
