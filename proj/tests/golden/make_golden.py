#!/usr/bin/env python3
"""Golden layer tables for every architecture id.

Each table lists, in construction order, layer name, kind and output shape
(H, W, C). Shapes come from the padding arithmetic below, written separately
from the C++ builders. Rows carrying a note mark the block a layer belongs to.
Lines starting with '#' record head attachment points and the prior settings,
which are adopted from the reference SSD design rather than derived here.

Run from this directory: python3 make_golden.py
"""
import math
import os

DETECT = dict(pixels=300, luma=38, chroma=19)
CLASSIFY = dict(pixels=224, luma=28, chroma=14)
HEAD_BOXES = [4, 6, 6, 6, 4, 4]
PRIORS = [("min_scale", "0.2"), ("max_scale", "0.9"), ("extra_scale", "1.04"),
          ("variances", "0.1,0.1,0.2,0.2"), ("aspect_ratios", "{2} or {2,3} per boxes")]


def out_extent(n, k, s, pad, dil=1):
    if pad == "same":
        return math.ceil(n / s)
    span = (k - 1) * dil + 1
    return (n - span) // s + 1


class Net:
    def __init__(self):
        self.rows = []
        self.shapes = {}
        self.heads = []

    def _add(self, name, kind, shape, note=""):
        assert name not in self.shapes, name
        self.rows.append((name, kind, shape, note))
        self.shapes[name] = shape
        return name

    def input(self, name, shape, note="input"):
        return self._add(name, "input", shape, note)

    def conv(self, name, x, c, k, s=1, pad="same", dil=1, note=""):
        h, w, _ = self.shapes[x]
        return self._add(name, "conv", (out_extent(h, k, s, pad, dil), out_extent(w, k, s, pad, dil), c), note)

    def conv_relu(self, name, x, c, k, s=1, pad="same", dil=1, note=""):
        return self.relu(name + "_relu", self.conv(name, x, c, k, s, pad, dil, note))

    def deconv(self, name, x, c, note=""):
        h, w, _ = self.shapes[x]
        return self._add(name, "deconv", (2 * h, 2 * w, c), note)

    def bn(self, name, x, note=""):
        return self._add(name, "batchnorm", self.shapes[x], note)

    def relu(self, name, x):
        return self._add(name, "relu", self.shapes[x])

    def pool(self, name, x, k, s, note=""):
        h, w, c = self.shapes[x]
        return self._add(name, "maxpool", (out_extent(h, k, s, "same"), out_extent(w, k, s, "same"), c), note)

    def concat(self, name, xs, note=""):
        h, w, _ = self.shapes[xs[0]]
        assert all(self.shapes[x][:2] == (h, w) for x in xs)
        return self._add(name, "concat", (h, w, sum(self.shapes[x][2] for x in xs)), note)

    def l2norm(self, name, x, note=""):
        return self._add(name, "l2norm", self.shapes[x], note)

    def add(self, name, a, b):
        assert self.shapes[a] == self.shapes[b]
        return self._add(name, "add", self.shapes[a])

    def slice(self, name, x, b, e, note=""):
        h, w, _ = self.shapes[x]
        return self._add(name, "slice", (h, w, e - b), note)

    def gap(self, name, x):
        return self._add(name, "global_avg_pool", (1, 1, self.shapes[x][2]))

    # ResNet bottleneck: 1x1 (carries the stride) -> kxk -> 1x1, BN after each
    # conv, projection shortcut for ConvBlocks.
    def block(self, p, x, widths, k=3, s=1, project=False, note=""):
        a, b, c = widths
        y = self.relu(p + "_2a_relu", self.bn(p + "_2a_bn", self.conv(p + "_2a", x, a, 1, s, note=note)))
        y = self.relu(p + "_2b_relu", self.bn(p + "_2b_bn", self.conv(p + "_2b", y, b, k)))
        y = self.bn(p + "_2c_bn", self.conv(p + "_2c", y, c, 1))
        if project:
            x = self.bn(p + "_1_bn", self.conv(p + "_1", x, c, 1, s))
        return self.relu(p + "_relu", self.add(p + "_add", y, x))

    def cb(self, p, x, widths, s=2, k=3, note=""):
        return self.block(p, x, widths, k, s, True, note)

    def ib(self, p, x, widths, k=3, note=""):
        return self.block(p, x, widths, k, 1, False, note)

    def stage(self, p, x, widths, n, s, note):
        x = self.cb(p + "a", x, widths, s, note=note)
        for i in range(1, n):
            x = self.ib(p + "bcdefg"[i - 1], x, widths)
        return x


CB2, CB3, CB4, CB5 = (64, 64, 256), (128, 128, 512), (256, 256, 1024), (512, 512, 2048)


def thin(c):
    return (c // 4, c // 4, c)


def vgg(net, kind, geo, detector, l2norm=True):
    if kind == "rgb":
        x = net.input("rgb", (geo["pixels"], geo["pixels"], 3))
        for blk, n, c in ((1, 2, 64), (2, 2, 128), (3, 3, 256)):
            for j in range(1, n + 1):
                x = net.conv_relu(f"conv{blk}_{j}", x, c, 3, note=f"C{blk}{j}" if j == 1 else "")
            x = net.pool(f"pool{blk}", x, 2, 2, note=f"P{blk}")
    else:
        y = net.input("y", (geo["luma"], geo["luma"], 64), "Y input")
        if kind == "deconv":
            cbcr = net.input("cbcr", (geo["chroma"], geo["chroma"], 128), "CbCr input")
            cb = net.deconv("cb_deconv", net.slice("cb_slice", cbcr, 0, 64), 64, "Cb deconv")
            cr = net.deconv("cr_deconv", net.slice("cr_slice", cbcr, 64, 128), 64, "Cr deconv")
            x = net.bn("concat_bn", net.concat("concat", [y, cb, cr], "Concat(38,38,192) at detector size"))
        else:
            x = net.conv_relu("conv_y", net.bn("y_bn", y, "BN on Y"), 256, 3, note="C(256,3,1)")
    for j in range(1, 4):
        x = net.conv_relu(f"conv4_{j}", x, 512, 3, note="C43 head source" if j == 3 else "")
    head1 = net.l2norm("conv4_3_norm", x, "optional L2 normalization") if detector and l2norm else x
    if detector:
        net.heads.append(("conv4_3", head1))
    x = net.pool("pool4", x, 2, 2, note="P4")
    if kind == "dct":
        cbcr = net.input("cbcr", (geo["chroma"], geo["chroma"], 128), "CbCr input")
        x = net.concat("concat", [x, net.bn("cbcr_bn", cbcr, "BN on CbCr")], "late concat")
    for j in range(1, 4):
        x = net.conv_relu(f"conv5_{j}", x, 512, 3)
    if detector:
        x = net.pool("pool5", x, 3, 1, note="P5 keeps resolution")
        x = net.conv_relu("fc6", x, 1024, 3, dil=6, note="fc6 as dilated conv")
        x = net.conv_relu("fc7", x, 1024, 1, note="fc7 head source")
        net.heads.append(("fc7", x))
        return x
    x = net.pool("pool5", x, 2, 2, note="P5")
    x = net.conv_relu("fc6", x, 4096, 7, pad="valid", note="fc6 as conv")
    return net.conv_relu("fc7", x, 4096, 1)


def resnet(net, geo, detector):
    x = net.input("rgb", (geo["pixels"], geo["pixels"], 3))
    x = net.relu("conv1_relu", net.bn("conv1_bn", net.conv("conv1", x, 64, 7, 2, note="C(64,7,2)")))
    x = net.pool("pool1", x, 3, 2, note="M(3,2)")
    x = net.stage("res2", x, CB2, 3, 1, "CB2(s=1)")
    x = net.stage("res3", x, CB3, 4, 2, "CB3")
    net.heads.append(("res3d", x))
    x = net.stage("res4", x, CB4, 6, 2, "CB4")
    return net.stage("res5", x, CB5, 3, 1 if detector else 2, "CB5")


def lcrfa(net, geo, detector, thinner, y_only):
    first, mid, last, chroma = (thin(384), thin(384), thin(768), thin(256)) if thinner else (CB4, CB3, CB3, CB3)
    y = net.bn("y_bn", net.input("y", (geo["luma"], geo["luma"], 64), "Y input"), "BN on Y")
    y = net.cb("y_res4a", y, first, 1, 1, note="CB4(k=1,s=1)")
    y = net.ib("y_res4b", y, first, 2, note="IB(k=2)")
    y = net.ib("y_res4c", y, first)
    y = net.cb("y_res3a", y, mid, 1, note="CB3 at stride 1")
    for s in "bcd":
        y = net.ib("y_res3" + s, y, mid)
    net.heads.append(("y_res3d", y))
    if y_only:
        x = net.cb("y_res3e", y, CB4, 2, note="widened to feed stage-4 blocks without chroma")
    else:
        y = net.cb("y_res3e", y, last, 2, note="CB3 replacing CB4")
        c = net.input("cbcr", (geo["chroma"], geo["chroma"], 128), "CbCr input")
        c = net.cb("c_res3a", net.bn("cbcr_bn", c, "BN on CbCr"), chroma, 1, 1, note="CB3 replacing CB4(k=1,s=1)")
        x = net.concat("concat", [y, c], "late concat")
    for s in "bcdef":
        x = net.ib("res4" + s, x, CB4)
    return net.stage("res5", x, CB5, 3, 1 if detector else 2, "CB5")


def deconv_rfa(net, geo, detector):
    y = net.input("y", (geo["luma"], geo["luma"], 64), "Y input")
    cbcr = net.input("cbcr", (geo["chroma"], geo["chroma"], 128), "CbCr input")
    cb = net.deconv("cb_deconv", net.slice("cb_slice", cbcr, 0, 64), 64, "Cb deconv")
    cr = net.deconv("cr_deconv", net.slice("cr_slice", cbcr, 64, 128), 64, "Cr deconv")
    x = net.concat("concat", [y, cb, cr], "Concat(38,38,192) at detector size")
    x = net.cb("stem_res4a", x, CB4, 1, 1, note="CB4(k=1,s=1)")
    x = net.ib("stem_res4b", x, CB4, 2, note="IB(k=2)")
    x = net.ib("stem_res4c", x, CB4)
    x = net.stage("res3", x, CB3, 4, 1, "CB3 at stride 1")
    net.heads.append(("res3d", x))
    x = net.stage("res4", x, CB4, 6, 2, "CB4")
    return net.stage("res5", x, CB5, 3, 1 if detector else 2, "CB5")


def ssd_extras(net, x):
    if len(net.heads) == 1:
        net.heads.append(("res5c", x))
    for blk, (c1, c2, s, pad) in zip(range(6, 10), ((256, 512, 2, "same"), (128, 256, 2, "same"),
                                                    (128, 256, 1, "valid"), (128, 256, 1, "valid"))):
        x = net.conv_relu(f"conv{blk}_1", x, c1, 1)
        x = net.conv_relu(f"conv{blk}_2", x, c2, 3, s, pad, note=f"C{blk}2 head source")
        net.heads.append((f"conv{blk}_2", x))
    for (base, src), boxes in zip(net.heads, HEAD_BOXES):
        net.conv(base + "_mbox_loc", src, boxes * 4, 3, note="box offsets")
        net.conv(base + "_mbox_conf", src, boxes * 21, 3, note="class logits")


def classifier(net, x):
    net.conv("predictions", net.gap("avg_pool", x), 1000, 1, note="1000-way linear")


BUILDERS = {
    "ssd300_rgb": lambda n, g, d: vgg(n, "rgb", g, d),
    "ssd_dct": lambda n, g, d: vgg(n, "dct", g, d),
    "ssd_dct_y": lambda n, g, d: vgg(n, "dct_y", g, d),
    "ssd_dct_deconv": lambda n, g, d: vgg(n, "deconv", g, d),
    "ssd_resnet50_rgb": resnet,
    "ssd_lcrfa": lambda n, g, d: lcrfa(n, g, d, False, False),
    "ssd_lcrfa_y": lambda n, g, d: lcrfa(n, g, d, False, True),
    "ssd_lcrfa_thinner": lambda n, g, d: lcrfa(n, g, d, True, False),
    "ssd_lcrfa_thinner_y": lambda n, g, d: lcrfa(n, g, d, True, True),
    "ssd_deconv_rfa": deconv_rfa,
}
BACKBONES = {
    "vgg16": "ssd300_rgb", "vgg_dct": "ssd_dct", "vgg_dct_y": "ssd_dct_y", "vgg_dct_deconv": "ssd_dct_deconv",
    "resnet50": "ssd_resnet50_rgb", "lcrfa": "ssd_lcrfa", "lcrfa_y": "ssd_lcrfa_y",
    "lcrfa_thinner": "ssd_lcrfa_thinner", "lcrfa_thinner_y": "ssd_lcrfa_thinner_y", "deconv_rfa": "ssd_deconv_rfa",
}


def table(arch):
    net = Net()
    if arch in BUILDERS:
        ssd_extras(net, BUILDERS[arch](net, DETECT, True))
    else:
        classifier(net, BUILDERS[BACKBONES[arch]](net, CLASSIFY, False))
        net.heads = []
    lines = [f"# {arch}"]
    for (base, src), boxes in zip(net.heads, HEAD_BOXES):
        h, w, _ = net.shapes[src]
        lines.append(f"#head\t{src}\t{h}\t{w}\t{boxes}")
    if net.heads:
        lines += [f"#prior\t{k}\t{v}\tadopted-reference" for k, v in PRIORS]
    for name, kind, (h, w, c), note in net.rows:
        lines.append("\t".join([name, kind, str(h), str(w), str(c), note]).rstrip("\t"))
    return "\n".join(lines) + "\n"


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    for arch in list(BUILDERS) + list(BACKBONES):
        with open(os.path.join(here, arch + ".tsv"), "w") as f:
            f.write(table(arch))


if __name__ == "__main__":
    main()
