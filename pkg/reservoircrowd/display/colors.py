from pathlib import Path

import matplotlib.colors as clr
import numpy as np
from matplotlib.cm import ScalarMappable
from matplotlib.figure import Figure

from reservoircrowd.metrics.density import WALL, DensityMap

# Group 0 walks right (red), group 1 walks left (blue).
_group_colors = dict(
    red=('#ff0000', '#ff000055'),
    blue=('#0000ff', '#0000ff55'),
)

_layer_colors = dict(
    wall=('#2ca02c', '#2ca02c55'),
    vacant=('#000000', '#00000077'),
    blank=('#ffffffff', '#ffffffff'),
)

_group_names = ('red', 'blue')


def color_picker(name):
    if isinstance(name, (int, np.integer)):
        return _group_colors[_group_names[int(name) % len(_group_names)]]
    elif name in _group_colors:
        return _group_colors[name]
    elif name in _layer_colors:
        return _layer_colors[name]
    elif name in clr.CSS4_COLORS:
        return clr.CSS4_COLORS[name]
    else:
        raise ValueError(
            f"{name} is not a valid color"
        )


def group_colormap(group):
    c_map = clr.LinearSegmentedColormap.from_list(
        f'group {group} occupancy', [_layer_colors['blank'][0], color_picker(group)[0]]
    )
    c_map.set_bad(_layer_colors['wall'][0])
    return c_map


def colorbar(figure, axes, c_map, vmax):
    mappable = ScalarMappable(norm=clr.Normalize(0.0, vmax), cmap=c_map)
    cb = figure.colorbar(mappable, ax=axes, fraction=0.046, pad=0.04)
    cb.ax.tick_params(labelsize=8, length=3, width=1.0)
    cb.outline.set_linewidth(1.0)
    return cb


def render_density(density: DensityMap, walls: np.ndarray, file_path) -> Path:
    """Save one occupancy panel per group, walls drawn in green."""
    n = len(density.groups)
    height, width = walls.shape
    figure = Figure(figsize=(max(4.0, width / 4.0), n * max(1.5, height / 4.0) + 0.5))
    for k, group in enumerate(density.groups):
        axes = figure.add_subplot(n, 1, k + 1)
        layer = np.ma.masked_where(walls, density.group(group))
        vmax = float(layer.max()) if layer.count() and layer.max() > 0 else 1.0
        c_map = group_colormap(group)
        axes.imshow(layer, cmap=c_map, vmin=0.0, vmax=vmax, interpolation='nearest')
        axes.set_title(f'group {group}, t {density.time_window[0]}-{density.time_window[1]}, '
                       f'episodes {density.episode_window[0]}-{density.episode_window[1]}', fontsize=8)
        axes.set_xticks([])
        axes.set_yticks([])
        colorbar(figure, axes, c_map, vmax)
    figure.tight_layout()
    figure.savefig(file_path, dpi=150)
    return Path(file_path)


def render_snapshot(labels: np.ndarray, file_path) -> Path:
    """Save one configuration as an image.

    Walls are green, vacant cells black and agents take their group color.
    """
    palette = [_layer_colors['wall'][0], _layer_colors['vacant'][0]] + [
        color_picker(g)[0] for g in range(max(1, int(labels.max())))
    ]
    c_map = clr.ListedColormap(palette)
    height, width = labels.shape
    figure = Figure(figsize=(max(4.0, width / 4.0), max(1.5, height / 4.0)))
    axes = figure.add_subplot(1, 1, 1)
    axes.imshow(labels - WALL, cmap=c_map, vmin=0, vmax=len(palette) - 1, interpolation='nearest')
    axes.set_xticks([])
    axes.set_yticks([])
    figure.tight_layout()
    figure.savefig(file_path, dpi=150)
    return Path(file_path)
