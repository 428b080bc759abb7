"""Two-stage sampling with a stand-in denoiser, with and without feet guidance.

The denoiser pulls toward a carrying motion lifted 10 cm off the floor; the
feet objective pushes the lower foot back down.
"""
import numpy as np

from hoiplan.diffusion import Guidance, InteractionCondition, StateLayout, generate_interaction, make_schedule
from hoiplan.guidance import FeetObjective
from hoiplan.io import load_skeleton
from hoiplan.synthetic import carry_motion


def main():
    sk = load_skeleton()
    lay = StateLayout(sk.n_joints)
    m = carry_motion(sk, 30)
    joints = m.global_joints(sk)
    target = lay.pack(obj_t=m.obj_t, obj_R=m.obj_R, joints=joints, joints6d=m.joints6d)
    target[:, lay.root_pos] = m.root
    target[1:, lay.joint_pos] += np.tile([0, 0, 0.1], sk.n_joints)
    traj = np.concatenate([target[:, lay.obj_pos], target[:, lay.root_pos]], axis=1)

    def tg(x, n, cond):
        return 0.5 * x + 0.5 * traj

    def ag(x, n, cond):
        return 0.5 * x + 0.5 * target

    cond = InteractionCondition(target[0], target[-1, lay.obj_pos], len(target), lay)
    sched = make_schedule(200)
    feet = FeetObjective(lay, sk, h=0.0)
    for name, guide in (("plain", None), ("guided", Guidance(feet, alpha=200.0))):
        res = generate_interaction(tg, ag, cond, sched, np.random.default_rng(0), guidance=guide)
        print(f"{name:7s} feet objective {feet.value(res.states):.4f}")


if __name__ == "__main__":
    main()
