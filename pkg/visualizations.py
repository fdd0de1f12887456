import plotly.graph_objects as go
from plotly.subplots import make_subplots
import networkx as nx
import json
import logging
from typing import Dict, List, Tuple

from rotation_poset import ClosedSubset, RotationPoset, leaf_and_neighbor, men_of


class PosetVisualizer:
    """Creates interactive figures for rotation posets and matching lattices"""

    def __init__(self):
        self.edge_colors = {
            1: '#1f77b4',   # produces an eliminated pair
            2: '#ff7f0e'    # reorders a skipped woman
        }

        self.node_colors = {
            'member': '#28a745',     # in the closed subset
            'leaf': '#20c997',
            'neighbor': '#ffc107',
            'outside': '#6c757d'
        }

    def _layered_positions(self, graph: nx.DiGraph) -> Dict[int, Tuple[float, float]]:
        positions = {}
        for depth, layer in enumerate(nx.topological_generations(graph)):
            layer = sorted(layer)
            for index, node in enumerate(layer):
                positions[node] = (index - (len(layer) - 1) / 2, -depth)
        return positions

    def create_poset_figure(self, poset: RotationPoset, subset=None) -> str:
        """
        Create a layered drawing of a rotation poset

        Args:
            poset (RotationPoset): rotation poset
            subset: optional closed subset to highlight with its leaves and neighbors

        Returns:
            str: JSON string of Plotly chart
        """
        try:
            positions = self._layered_positions(poset.graph)
            members, leaves, neighbors = frozenset(), frozenset(), frozenset()
            if subset is not None:
                members = subset.members if isinstance(subset, ClosedSubset) else frozenset(subset)
                leaves, neighbors = leaf_and_neighbor(poset, members)

            fig = go.Figure()
            for kind, color in self.edge_colors.items():
                xs, ys = [], []
                for u, v, edge_type in sorted(poset.edges):
                    if edge_type != kind:
                        continue
                    xs += [positions[u][0], positions[v][0], None]
                    ys += [positions[u][1], positions[v][1], None]
                if xs:
                    fig.add_trace(go.Scatter(x=xs, y=ys, mode='lines', name=f'type {kind}',
                                             line=dict(color=color, width=2)))

            ids = poset.ids
            colors = []
            for rid in ids:
                if rid in leaves:
                    colors.append(self.node_colors['leaf'])
                elif rid in members:
                    colors.append(self.node_colors['member'])
                elif rid in neighbors:
                    colors.append(self.node_colors['neighbor'])
                else:
                    colors.append(self.node_colors['outside'])

            fig.add_trace(go.Scatter(
                x=[positions[r][0] for r in ids],
                y=[positions[r][1] for r in ids],
                mode='markers+text',
                name='rotations',
                marker=dict(size=28, color=colors),
                text=[f'ρ{r}' for r in ids],
                textposition='middle center',
                hovertext=[' '.join(f'({m},{w})' for m, w in poset.by_id[r].cycle) for r in ids],
                hoverinfo='text'
            ))

            fig.update_layout(
                title=f'Rotation Poset ({len(ids)} rotations, {len(poset.edges)} edges)',
                height=600,
                showlegend=True,
                template='plotly_white'
            )
            fig.update_xaxes(visible=False)
            fig.update_yaxes(visible=False)
            return fig.to_json()

        except Exception as e:
            logging.error(f"Error creating poset figure: {str(e)}")
            return json.dumps({'error': str(e)})

    def create_lattice_figure(self, poset: RotationPoset, lattice: List) -> str:
        """
        Create a Hasse diagram of the stable matchings, with the men each rotation moves

        Args:
            poset (RotationPoset): rotation poset
            lattice (List): (ClosedSubset, Matching) entries in enumeration order

        Returns:
            str: JSON string of Plotly chart
        """
        try:
            if not lattice:
                return json.dumps({'error': 'No stable matchings to draw'})

            index = {entry[0].members: k for k, entry in enumerate(lattice)}
            levels: Dict[int, List[int]] = {}
            for k, (subset, _) in enumerate(lattice):
                levels.setdefault(len(subset.members), []).append(k)
            positions = {}
            for level, entries in levels.items():
                for i, k in enumerate(entries):
                    positions[k] = (i - (len(entries) - 1) / 2, level)

            fig = make_subplots(
                rows=1, cols=2,
                column_widths=[0.7, 0.3],
                subplot_titles=('Stable Matching Lattice', 'Men Moved per Rotation')
            )

            xs, ys = [], []
            for k, (subset, _) in enumerate(lattice):
                for rid in poset.ids:
                    grown = subset.members | {rid}
                    if rid not in subset.members and grown in index:
                        target = index[grown]
                        xs += [positions[k][0], positions[target][0], None]
                        ys += [positions[k][1], positions[target][1], None]
            fig.add_trace(go.Scatter(x=xs, y=ys, mode='lines', name='eliminations',
                                     line=dict(color='#adb5bd')), row=1, col=1)

            fig.add_trace(go.Scatter(
                x=[positions[k][0] for k in range(len(lattice))],
                y=[positions[k][1] for k in range(len(lattice))],
                mode='markers+text',
                name='matchings',
                marker=dict(size=14, color='#1f77b4'),
                text=[f'M{k}' for k in range(len(lattice))],
                textposition='top center',
                hovertext=[' '.join(f'({m},{w})' for m, w in matching.sorted_pairs())
                           for _, matching in lattice],
                hoverinfo='text'
            ), row=1, col=1)

            fig.add_trace(go.Bar(
                x=[f'ρ{r}' for r in poset.ids],
                y=[len(men_of([poset.by_id[r]])) for r in poset.ids],
                name='men moved',
                marker_color=self.edge_colors[1]
            ), row=1, col=2)

            fig.update_layout(
                title=f'{len(lattice)} Stable Matchings',
                height=600,
                showlegend=False,
                template='plotly_white'
            )
            fig.update_yaxes(title_text='Rotations eliminated', row=1, col=1)
            fig.update_yaxes(title_text='Men', row=1, col=2)
            return fig.to_json()

        except Exception as e:
            logging.error(f"Error creating lattice figure: {str(e)}")
            return json.dumps({'error': str(e)})
