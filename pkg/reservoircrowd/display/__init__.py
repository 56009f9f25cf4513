from .colors import color_picker, group_colormap, render_density, render_snapshot
